#pragma once

// Plain DE/rand/1/bin written out longhand with fixed F and CR. It follows
// the engine's documented stream layout (initial genomes from the
// "ade-init" stream, one substream per (generation, candidate)) but shares
// no code with it, so the two can check each other.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "adeqvaet/rng.hpp"

namespace de_reference {

struct Trace {
    std::vector<double> best;  // per generation, generation 0 = initial population
};

inline Trace run(const std::function<double(const std::vector<double>&)>& f, std::size_t dim, double lo, double hi,
                 std::size_t pop, std::size_t gens, std::uint64_t seed, double F, double CR) {
    using adeqvaet::Rng;
    auto scaled = [&](const std::vector<double>& g) {
        std::vector<double> x(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) x[i] = lo + g[i] * (hi - lo);
        return f(x);
    };
    Rng init(adeqvaet::derive_seed(seed, "ade-init"));
    std::vector<std::vector<double>> Y(pop, std::vector<double>(dim));
    std::vector<double> fit(pop);
    for (auto& y : Y)
        for (auto& g : y) g = init.uniform();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pop; ++j) {
        fit[j] = scaled(Y[j]);
        best = std::min(best, fit[j]);
    }
    Trace t;
    t.best.push_back(best);
    for (std::size_t gen = 1; gen <= gens; ++gen) {
        std::vector<std::vector<double>> V(pop);
        for (std::size_t j = 0; j < pop; ++j) {
            Rng r(adeqvaet::derive_seed(seed, gen, j));
            std::size_t a, b, c;
            do a = r.index(pop);
            while (a == j);
            do b = r.index(pop);
            while (b == j || b == a);
            do c = r.index(pop);
            while (c == j || c == a || c == b);
            const std::size_t forced = r.index(dim);
            V[j] = Y[j];
            for (std::size_t g = 0; g < dim; ++g) {
                const double u = r.uniform();
                if (u <= CR || g == forced) V[j][g] = std::clamp(Y[a][g] + F * (Y[b][g] - Y[c][g]), 0.0, 1.0);
            }
        }
        for (std::size_t j = 0; j < pop; ++j) {
            const double fv = scaled(V[j]);
            best = std::min(best, fv);
            if (fv <= fit[j]) {
                Y[j] = V[j];
                fit[j] = fv;
            }
        }
        t.best.push_back(best);
    }
    return t;
}

}  // namespace de_reference
