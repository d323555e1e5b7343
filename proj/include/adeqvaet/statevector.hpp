#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace adeqvaet::quantum {

using Complex = std::complex<double>;

struct Gate {
    enum class Kind { ry, cnot, h, x };

    Kind kind = Kind::x;
    std::size_t target = 0;
    std::size_t control = 0;  // cnot only
    double theta = 0.0;       // ry only

    static Gate ry(std::size_t q, double theta) { return {Kind::ry, q, 0, theta}; }
    static Gate cnot(std::size_t control, std::size_t target) { return {Kind::cnot, target, control, 0.0}; }
    static Gate h(std::size_t q) { return {Kind::h, q, 0, 0.0}; }
    static Gate x(std::size_t q) { return {Kind::x, q, 0, 0.0}; }

    Gate inverse() const;
};

// Pure state over n qubits. Basis index bit q holds qubit q; kets are
// written with qubit 0 leftmost, so |10> is index 1.
class Statevector {
public:
    static constexpr std::size_t max_qubits = 24;

    /// |0...0>
    explicit Statevector(std::size_t n_qubits);
    static Statevector from_amplitudes(std::vector<Complex> amplitudes);

    std::size_t n_qubits() const { return n_qubits_; }
    std::span<const Complex> amplitudes() const { return amps_; }
    Complex amplitude(std::size_t basis) const { return amps_.at(basis); }

    /// In-place application; throws QubitOutOfRange.
    void apply(const Gate& gate);
    void ry(std::size_t q, double theta);
    void cnot(std::size_t control, std::size_t target);

    /// <Z_q> = P(bit q = 0) - P(bit q = 1)
    double expectation_z(std::size_t q) const;
    /// Sum of |amp|^2 * diag[i]; diag has one entry per basis state.
    double expectation_diagonal(std::span<const double> diag) const;
    double norm_squared() const;

private:
    void check(std::size_t q) const;

    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

Statevector apply_gate(Statevector state, const Gate& gate);

}  // namespace adeqvaet::quantum
