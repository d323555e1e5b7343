#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adeqvaet/rng.hpp"

namespace adeqvaet::ade {

enum class ParamKind { continuous, integer, log_scaled };

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    ParamKind kind = ParamKind::continuous;
};

struct SearchSpace {
    std::vector<Dimension> dims;

    std::size_t size() const { return dims.size(); }
    void validate() const;

    /// d continuous dimensions x0..x{d-1} on [lo, hi].
    static SearchSpace box(std::size_t d, double lo, double hi);
};

/// Maps a genome in [0,1]^d onto the search space.
std::vector<double> decode_genome(std::span<const double> genome, const SearchSpace& space);

struct Candidate {
    std::vector<double> genome;         // in [0,1]^d
    std::optional<double> fitness;      // internal, minimised
    std::size_t id = 0;
};

struct ControlParams {
    double F = 0.5;   // (0, 1]
    double CR = 0.9;  // [0, 1]
};

struct AdaptState {
    double mu_F = 0.5;
    double mu_CR = 0.5;
    double c = 0.1;
    std::vector<double> success_F;
    std::vector<double> success_CR;
};

enum class CrossoverMode {
    binomial,      // per-gene draw with one forced donor gene
    whole_vector,  // a single draw takes the whole donor or keeps the target
};

struct AdeConfig {
    std::size_t pop_size = 30;
    std::size_t max_generations = 100;
    std::size_t patience = 30;  // 0 disables the stall stop
    std::uint64_t seed = 0;
    double c = 0.1;
    std::optional<ControlParams> fixed_control;  // set => classical DE, no adaptation
    CrossoverMode crossover = CrossoverMode::binomial;
    std::size_t threads = 1;

    void validate() const;
};

struct Population {
    std::vector<Candidate> members;
    AdaptState adapt;
};

Population init_population(const SearchSpace& space, const AdeConfig& cfg);

/// a + F * (b - c), clipped to [0,1].
std::vector<double> donor_vector(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                                 double F);

/// DE/rand/1: three distinct members other than `target`, drawn from rng.
std::vector<double> mutate(const std::vector<Candidate>& population, std::size_t target, double F, Rng& rng);

/// Binomial crossover with explicit draws (j_rand and one uniform per gene).
std::vector<double> crossover_with_draws(std::span<const double> target, std::span<const double> donor, double CR,
                                         std::size_t j_rand, std::span<const double> draws);

std::vector<double> crossover(std::span<const double> target, std::span<const double> donor, double CR, Rng& rng,
                              CrossoverMode mode = CrossoverMode::binomial);

/// Replaces target when trial fitness <= target fitness; records the
/// control parameters of a success. Returns true on replacement.
bool select(Candidate& target, Candidate trial, const ControlParams& used, AdaptState& adapt);

/// F ~ Cauchy(mu_F, 0.1) redrawn while <= 0 and capped at 1;
/// CR ~ Normal(mu_CR, 0.1) clipped to [0,1].
ControlParams sample_control(const AdaptState& adapt, Rng& rng);

/// sum(s^2) / sum(s)
double lehmer_mean(std::span<const double> values);

/// Moves mu_F towards the Lehmer mean of successful F and mu_CR towards the
/// arithmetic mean of successful CR, then clears the success lists.
void adapt_parameters(AdaptState& adapt);

struct GenerationRecord {
    std::size_t gen = 0;  // 0 = initial population
    double best = 0.0;    // objective units (score when maximising)
    double mean = 0.0;
    double mu_F = 0.0;
    double mu_CR = 0.0;
    std::vector<double> best_theta;
};

struct EvaluationRecord {
    std::size_t gen = 0;
    std::size_t id = 0;
    std::vector<double> theta;
    double value = 0.0;  // objective units
    bool failed = false;
};

struct AdeResult {
    std::vector<double> best_theta;
    std::vector<double> best_genome;
    double best_value = 0.0;  // objective units
    double best_fitness = 0.0;  // internal minimised fitness
    std::size_t generations_run = 0;
    std::vector<GenerationRecord> history;
    std::vector<EvaluationRecord> evaluations;
};

using Objective = std::function<double(std::span<const double> theta)>;

/// Minimises the objective directly (benchmarks).
AdeResult minimize(const Objective& objective, const SearchSpace& space, const AdeConfig& cfg);

/// Maximises a score; internally minimises 1 - score.
AdeResult maximize(const Objective& score, const SearchSpace& space, const AdeConfig& cfg);

/// One JSON object per generation: gen, best, mean, mu_F, mu_CR, best_theta.
std::string history_jsonl(const AdeResult& result, const SearchSpace& space);

namespace benchmarks {
double sphere(std::span<const double> x);
double rosenbrock(std::span<const double> x);
double rastrigin(std::span<const double> x);
}  // namespace benchmarks

}  // namespace adeqvaet::ade
