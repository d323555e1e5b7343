#include "adeqvaet/rng.hpp"

#include <cmath>
#include <numbers>

namespace adeqvaet {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
    return mix64(mix64(master) ^ fnv1a64(label));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(mix64(master) ^ a) + mix64(b ^ 0xd1b54a32d192ed03ULL));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    // Rejection keeps the draw unbiased for any n.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % range);
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::cauchy(double location, double scale) {
    return location + scale * std::tan(std::numbers::pi * (uniform() - 0.5));
}

}  // namespace adeqvaet
