#include "adeqvaet/statevector.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "adeqvaet/error.hpp"

namespace adeqvaet::quantum {

Gate Gate::inverse() const {
    Gate g = *this;
    if (kind == Kind::ry) g.theta = -theta;
    return g;  // H, X and CNOT are self-inverse
}

Statevector::Statevector(std::size_t n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits == 0 || n_qubits > max_qubits)
        throw QubitOutOfRange("statevector supports 1.." + std::to_string(max_qubits) + " qubits");
    amps_.assign(std::size_t{1} << n_qubits, Complex(0.0, 0.0));
    amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(std::vector<Complex> amplitudes) {
    const std::size_t dim = amplitudes.size();
    if (dim < 2 || !std::has_single_bit(dim)) throw DimensionMismatch("amplitude count must be 2^n with n >= 1");
    Statevector s(static_cast<std::size_t>(std::countr_zero(dim)));
    s.amps_ = std::move(amplitudes);
    return s;
}

void Statevector::check(std::size_t q) const {
    if (q >= n_qubits_)
        throw QubitOutOfRange("qubit " + std::to_string(q) + " out of range for " +
                              std::to_string(n_qubits_) + " qubits");
}

void Statevector::ry(std::size_t q, double theta) {
    check(q);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const std::size_t bit = std::size_t{1} << q;
    const std::size_t dim = amps_.size();
    for (std::size_t base = 0; base < dim; base += 2 * bit)
        for (std::size_t i = base; i < base + bit; ++i) {
            const Complex a0 = amps_[i];
            const Complex a1 = amps_[i | bit];
            amps_[i] = c * a0 - s * a1;
            amps_[i | bit] = s * a0 + c * a1;
        }
}

void Statevector::cnot(std::size_t control, std::size_t target) {
    check(control);
    check(target);
    if (control == target) throw QubitOutOfRange("CNOT control and target coincide");
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    for (std::size_t i = 0; i < amps_.size(); ++i)
        if ((i & cbit) && !(i & tbit)) std::swap(amps_[i], amps_[i | tbit]);
}

void Statevector::apply(const Gate& gate) {
    switch (gate.kind) {
        case Gate::Kind::ry:
            ry(gate.target, gate.theta);
            break;
        case Gate::Kind::cnot:
            cnot(gate.control, gate.target);
            break;
        case Gate::Kind::h: {
            check(gate.target);
            const double r = std::numbers::sqrt2 / 2.0;
            const std::size_t bit = std::size_t{1} << gate.target;
            for (std::size_t i = 0; i < amps_.size(); ++i) {
                if (i & bit) continue;
                const Complex a0 = amps_[i];
                const Complex a1 = amps_[i | bit];
                amps_[i] = r * (a0 + a1);
                amps_[i | bit] = r * (a0 - a1);
            }
            break;
        }
        case Gate::Kind::x: {
            check(gate.target);
            const std::size_t bit = std::size_t{1} << gate.target;
            for (std::size_t i = 0; i < amps_.size(); ++i)
                if (!(i & bit)) std::swap(amps_[i], amps_[i | bit]);
            break;
        }
    }
}

double Statevector::expectation_z(std::size_t q) const {
    check(q);
    const std::size_t bit = std::size_t{1} << q;
    double e = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) e += (i & bit) ? -std::norm(amps_[i]) : std::norm(amps_[i]);
    return e;
}

double Statevector::expectation_diagonal(std::span<const double> diag) const {
    if (diag.size() != amps_.size()) throw DimensionMismatch("diagonal observable size mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) e += std::norm(amps_[i]) * diag[i];
    return e;
}

double Statevector::norm_squared() const {
    double n = 0.0;
    for (const auto& a : amps_) n += std::norm(a);
    return n;
}

Statevector apply_gate(Statevector state, const Gate& gate) {
    state.apply(gate);
    return state;
}

}  // namespace adeqvaet::quantum
