#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace adeqvaet {

/// splitmix64 finalizer; used for seed derivation only.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Derive a sub-seed from a master seed and a component label.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;

/// Counter-based substream: distinct (a, b) give independent seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept;

// Seeded generator with distribution code kept in-house so that draws (and
// every golden fixture built on them) do not depend on the standard
// library's implementation-defined distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n); n must be positive.
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller (no cached second variate).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double cauchy(double location, double scale);

private:
    std::mt19937_64 engine_;
};

}  // namespace adeqvaet
