#include <doctest.h>

#include <cmath>
#include <numbers>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"
#include "adeqvaet/statevector.hpp"

using namespace adeqvaet;
using namespace adeqvaet::quantum;

namespace {

Gate random_gate(std::size_t n, Rng& rng) {
    switch (rng.index(n > 1 ? 4 : 3)) {
        case 0: return Gate::ry(rng.index(n), rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi));
        case 1: return Gate::h(rng.index(n));
        case 2: return Gate::x(rng.index(n));
        default: {
            const std::size_t c = rng.index(n);
            std::size_t t = rng.index(n - 1);
            if (t >= c) ++t;
            return Gate::cnot(c, t);
        }
    }
}

Statevector random_state(std::size_t n, Rng& rng) {
    std::vector<Complex> amps(std::size_t{1} << n);
    double norm = 0.0;
    for (auto& a : amps) {
        a = {rng.normal(), rng.normal()};
        norm += std::norm(a);
    }
    for (auto& a : amps) a /= std::sqrt(norm);
    return Statevector::from_amplitudes(amps);
}

}  // namespace

TEST_CASE("hadamard on |0>") {
    const auto s = apply_gate(Statevector(1), Gate::h(0));
    CHECK(std::abs(s.amplitude(0) - Complex(1 / std::sqrt(2.0))) < 1e-15);
    CHECK(std::abs(s.amplitude(1) - Complex(1 / std::sqrt(2.0))) < 1e-15);
}

TEST_CASE("cnot flips the target when the control is set") {
    // |10>: qubit 0 is 1, qubit 1 is 0.
    auto s = apply_gate(Statevector(2), Gate::x(0));
    CHECK(std::abs(s.amplitude(1) - Complex(1.0)) < 1e-15);
    s.apply(Gate::cnot(0, 1));
    CHECK(std::abs(s.amplitude(3) - Complex(1.0)) < 1e-15);  // |11>
    CHECK(std::abs(s.amplitude(1)) < 1e-15);

    // Control clear: nothing happens.
    auto t = Statevector(2);
    t.apply(Gate::cnot(0, 1));
    CHECK(std::abs(t.amplitude(0) - Complex(1.0)) < 1e-15);
}

TEST_CASE("ry by pi sends |0> to |1>") {
    const auto s = apply_gate(Statevector(1), Gate::ry(0, std::numbers::pi));
    CHECK(std::abs(std::abs(s.amplitude(1)) - 1.0) < 1e-15);
    CHECK(s.expectation_z(0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("ry expectation is cos theta") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const double th = rng.uniform(-4, 4);
        CHECK(std::abs(apply_gate(Statevector(1), Gate::ry(0, th)).expectation_z(0) - std::cos(th)) < 1e-14);
    }
}

TEST_CASE("qubit range checks") {
    Statevector s(3);
    CHECK_THROWS_AS(s.apply(Gate::ry(3, 0.1)), QubitOutOfRange);
    CHECK_THROWS_AS(s.apply(Gate::cnot(1, 1)), QubitOutOfRange);
    CHECK_THROWS_AS(s.apply(Gate::cnot(0, 5)), QubitOutOfRange);
    CHECK_THROWS_AS(s.expectation_z(4), QubitOutOfRange);
}

TEST_CASE("norm survives 1000 random gates") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const std::size_t n = 2 + seed;
        auto s = random_state(n, rng);
        for (int i = 0; i < 1000; ++i) s.apply(random_gate(n, rng));
        CHECK(std::abs(s.norm_squared() - 1.0) < 1e-10);
    }
}

TEST_CASE("gate then inverse restores the state") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(5);
        const auto s = random_state(n, rng);
        const auto g = random_gate(n, rng);
        const auto back = apply_gate(apply_gate(s, g), g.inverse());
        for (std::size_t i = 0; i < (std::size_t{1} << n); ++i)
            CHECK(std::abs(back.amplitude(i) - s.amplitude(i)) < 1e-10);
    }
}

TEST_CASE("diagonal expectation matches a sum of Z expectations") {
    Rng rng(3);
    const std::size_t n = 4;
    const auto s = random_state(n, rng);
    const std::vector<double> g = {0.3, -1.2, 0.7, 2.0};
    std::vector<double> diag(std::size_t{1} << n);
    for (std::size_t i = 0; i < diag.size(); ++i)
        for (std::size_t q = 0; q < n; ++q) diag[i] += g[q] * (((i >> q) & 1) ? -1.0 : 1.0);
    double expect = 0.0;
    for (std::size_t q = 0; q < n; ++q) expect += g[q] * s.expectation_z(q);
    CHECK(std::abs(s.expectation_diagonal(diag) - expect) < 1e-12);
}
