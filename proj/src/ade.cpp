#include "adeqvaet/ade.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adeqvaet/error.hpp"

namespace adeqvaet::ade {

void SearchSpace::validate() const {
    if (dims.empty()) throw InvalidConfig("search space has no dimensions");
    for (const auto& d : dims) {
        if (!(d.lower < d.upper)) throw InvalidConfig("dimension '" + d.name + "' needs lower < upper");
        if (d.kind == ParamKind::log_scaled && !(d.lower > 0.0))
            throw InvalidConfig("log-scaled dimension '" + d.name + "' needs lower > 0");
    }
}

SearchSpace SearchSpace::box(std::size_t d, double lo, double hi) {
    SearchSpace s;
    for (std::size_t i = 0; i < d; ++i) s.dims.push_back({"x" + std::to_string(i), lo, hi, ParamKind::continuous});
    return s;
}

std::vector<double> decode_genome(std::span<const double> genome, const SearchSpace& space) {
    if (genome.size() != space.size())
        throw DimensionMismatch("genome has " + std::to_string(genome.size()) + " genes, space has " +
                                std::to_string(space.size()) + " dimensions");
    std::vector<double> theta(genome.size());
    for (std::size_t i = 0; i < genome.size(); ++i) {
        const auto& d = space.dims[i];
        const double g = genome[i];
        switch (d.kind) {
            case ParamKind::continuous:
                theta[i] = d.lower + g * (d.upper - d.lower);
                break;
            case ParamKind::log_scaled:
                theta[i] = g == 0.0 ? d.lower : std::exp(std::log(d.lower) + g * (std::log(d.upper) - std::log(d.lower)));
                break;
            case ParamKind::integer:
                theta[i] = std::clamp(std::round(d.lower + g * (d.upper - d.lower)), d.lower, d.upper);
                break;
        }
    }
    return theta;
}

void AdeConfig::validate() const {
    if (pop_size < 4) throw PopulationTooSmall("population needs at least 4 members, got " + std::to_string(pop_size));
    if (!(c >= 0.0 && c <= 1.0)) throw InvalidConfig("adaptation rate c must be in [0,1]");
    if (fixed_control) {
        if (!(fixed_control->F > 0.0 && fixed_control->F <= 1.0)) throw InvalidConfig("fixed F must be in (0,1]");
        if (!(fixed_control->CR >= 0.0 && fixed_control->CR <= 1.0)) throw InvalidConfig("fixed CR must be in [0,1]");
    }
}

Population init_population(const SearchSpace& space, const AdeConfig& cfg) {
    cfg.validate();
    space.validate();
    Rng rng(derive_seed(cfg.seed, "ade-init"));
    Population pop;
    pop.adapt.c = cfg.c;
    pop.members.resize(cfg.pop_size);
    for (std::size_t j = 0; j < cfg.pop_size; ++j) {
        pop.members[j].id = j;
        pop.members[j].genome.resize(space.size());
        for (double& g : pop.members[j].genome) g = rng.uniform();
    }
    return pop;
}

std::vector<double> donor_vector(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                                 double F) {
    if (a.size() != b.size() || a.size() != c.size()) throw DimensionMismatch("mutation vectors differ in length");
    std::vector<double> x(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = std::clamp(a[i] + F * (b[i] - c[i]), 0.0, 1.0);
    return x;
}

std::vector<double> mutate(const std::vector<Candidate>& population, std::size_t target, double F, Rng& rng) {
    const std::size_t n = population.size();
    if (n < 4) throw PopulationTooSmall("mutation needs at least 4 members");
    std::size_t s1, s2, s3;
    do s1 = rng.index(n);
    while (s1 == target);
    do s2 = rng.index(n);
    while (s2 == target || s2 == s1);
    do s3 = rng.index(n);
    while (s3 == target || s3 == s1 || s3 == s2);
    return donor_vector(population[s1].genome, population[s2].genome, population[s3].genome, F);
}

std::vector<double> crossover_with_draws(std::span<const double> target, std::span<const double> donor, double CR,
                                         std::size_t j_rand, std::span<const double> draws) {
    if (target.size() != donor.size() || draws.size() != target.size())
        throw DimensionMismatch("crossover vectors differ in length");
    std::vector<double> trial(target.begin(), target.end());
    for (std::size_t g = 0; g < trial.size(); ++g)
        if (draws[g] <= CR || g == j_rand) trial[g] = donor[g];
    return trial;
}

std::vector<double> crossover(std::span<const double> target, std::span<const double> donor, double CR, Rng& rng,
                              CrossoverMode mode) {
    if (target.size() != donor.size()) throw DimensionMismatch("crossover vectors differ in length");
    if (mode == CrossoverMode::whole_vector) {
        const bool take = rng.uniform() <= CR;
        const auto src = take ? donor : target;
        return {src.begin(), src.end()};
    }
    const std::size_t j_rand = rng.index(target.size());
    std::vector<double> draws(target.size());
    for (double& r : draws) r = rng.uniform();
    return crossover_with_draws(target, donor, CR, j_rand, draws);
}

bool select(Candidate& target, Candidate trial, const ControlParams& used, AdaptState& adapt) {
    if (!target.fitness || !trial.fitness) throw InvalidConfig("select needs evaluated candidates");
    if (*trial.fitness <= *target.fitness) {
        trial.id = target.id;
        target = std::move(trial);
        adapt.success_F.push_back(used.F);
        adapt.success_CR.push_back(used.CR);
        return true;
    }
    return false;
}

ControlParams sample_control(const AdaptState& adapt, Rng& rng) {
    ControlParams p;
    do p.F = rng.cauchy(adapt.mu_F, 0.1);
    while (!(p.F > 0.0));
    p.F = std::min(p.F, 1.0);
    p.CR = std::clamp(rng.normal(adapt.mu_CR, 0.1), 0.0, 1.0);
    return p;
}

double lehmer_mean(std::span<const double> values) {
    double num = 0.0;
    double den = 0.0;
    for (double s : values) {
        num += s * s;
        den += s;
    }
    return den > 0.0 ? num / den : 0.0;
}

void adapt_parameters(AdaptState& adapt) {
    if (!adapt.success_F.empty()) {
        double mean_cr = 0.0;
        for (double v : adapt.success_CR) mean_cr += v;
        mean_cr /= static_cast<double>(adapt.success_CR.size());
        adapt.mu_F = (1.0 - adapt.c) * adapt.mu_F + adapt.c * lehmer_mean(adapt.success_F);
        adapt.mu_CR = (1.0 - adapt.c) * adapt.mu_CR + adapt.c * mean_cr;
    }
    adapt.success_F.clear();
    adapt.success_CR.clear();
}

namespace {

constexpr double kWorst = std::numeric_limits<double>::infinity();

// Runs fitness(i) for every i into out[i], on up to `threads` workers.
template <typename Fn>
void evaluate_all(std::size_t count, std::size_t threads, std::vector<double>& out, std::vector<char>& failed, Fn&& fitness) {
    out.assign(count, kWorst);
    failed.assign(count, 0);
    auto run_one = [&](std::size_t i) {
        try {
            const double f = fitness(i);
            if (std::isnan(f)) throw std::runtime_error("objective returned NaN");
            out[i] = f;
        } catch (const std::exception& e) {
            failed[i] = 1;
            spdlog::warn("{}", CandidateEvaluationFailed(i, e.what()).what());
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) run_one(i);
        });
    for (auto& t : pool) t.join();
}

struct Units {
    bool maximise = false;
    double to_units(double fitness) const { return maximise ? 1.0 - fitness : fitness; }
};

AdeResult run(const Objective& objective, const SearchSpace& space, const AdeConfig& cfg, Units units) {
    cfg.validate();
    space.validate();
    Population pop = init_population(space, cfg);
    auto& members = pop.members;
    const std::size_t n = members.size();

    AdeResult result;
    auto fitness_of = [&](const std::vector<double>& genome) {
        const double v = objective(decode_genome(genome, space));
        return units.maximise ? 1.0 - v : v;
    };

    std::vector<double> values;
    std::vector<char> failed;
    auto log_evals = [&](std::size_t gen, const std::vector<std::vector<double>>& genomes) {
        for (std::size_t j = 0; j < genomes.size(); ++j)
            result.evaluations.push_back({gen, j, decode_genome(genomes[j], space),
                                          failed[j] ? std::numeric_limits<double>::quiet_NaN() : units.to_units(values[j]),
                                          failed[j] != 0});
    };

    double best = kWorst;
    std::vector<double> best_genome = members.front().genome;
    auto consider = [&](double f, const std::vector<double>& genome) {
        if (f < best) {
            best = f;
            best_genome = genome;
            return true;
        }
        return false;
    };

    auto record = [&](std::size_t gen) {
        double mean = 0.0;
        for (const auto& m : members) mean += *m.fitness;
        mean /= static_cast<double>(n);
        result.history.push_back({gen, units.to_units(best), units.to_units(mean), pop.adapt.mu_F, pop.adapt.mu_CR,
                                  decode_genome(best_genome, space)});
    };

    {
        std::vector<std::vector<double>> genomes;
        for (const auto& m : members) genomes.push_back(m.genome);
        evaluate_all(n, cfg.threads, values, failed, [&](std::size_t j) { return fitness_of(genomes[j]); });
        log_evals(0, genomes);
        for (std::size_t j = 0; j < n; ++j) {
            members[j].fitness = values[j];
            consider(values[j], members[j].genome);
        }
        record(0);
    }

    std::size_t stall = 0;
    for (std::size_t gen = 1; gen <= cfg.max_generations; ++gen) {
        std::vector<std::vector<double>> trials(n);
        std::vector<ControlParams> used(n);
        for (std::size_t j = 0; j < n; ++j) {
            // Per-candidate substream keeps draws independent of evaluation order.
            Rng rng(derive_seed(cfg.seed, gen, j));
            used[j] = cfg.fixed_control ? *cfg.fixed_control : sample_control(pop.adapt, rng);
            const auto donor = mutate(members, j, used[j].F, rng);
            trials[j] = crossover(members[j].genome, donor, used[j].CR, rng, cfg.crossover);
        }
        evaluate_all(n, cfg.threads, values, failed, [&](std::size_t j) { return fitness_of(trials[j]); });
        log_evals(gen, trials);

        bool improved = false;
        for (std::size_t j = 0; j < n; ++j) {
            improved |= consider(values[j], trials[j]);
            Candidate trial{std::move(trials[j]), values[j], j};
            select(members[j], std::move(trial), used[j], pop.adapt);
        }
        if (cfg.fixed_control) {
            pop.adapt.success_F.clear();
            pop.adapt.success_CR.clear();
        } else {
            adapt_parameters(pop.adapt);
        }
        record(gen);
        result.generations_run = gen;
        stall = improved ? 0 : stall + 1;
        if (cfg.patience > 0 && stall >= cfg.patience) break;
    }

    result.best_fitness = best;
    result.best_value = units.to_units(best);
    result.best_genome = best_genome;
    result.best_theta = decode_genome(best_genome, space);
    return result;
}

}  // namespace

AdeResult minimize(const Objective& objective, const SearchSpace& space, const AdeConfig& cfg) {
    return run(objective, space, cfg, Units{false});
}

AdeResult maximize(const Objective& score, const SearchSpace& space, const AdeConfig& cfg) {
    return run(score, space, cfg, Units{true});
}

std::string history_jsonl(const AdeResult& result, const SearchSpace& space) {
    std::string out;
    for (const auto& h : result.history) {
        nlohmann::ordered_json j;
        j["gen"] = h.gen;
        j["best"] = h.best;
        j["mean"] = h.mean;
        j["mu_F"] = h.mu_F;
        j["mu_CR"] = h.mu_CR;
        nlohmann::ordered_json theta = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < h.best_theta.size() && i < space.size(); ++i) theta[space.dims[i].name] = h.best_theta[i];
        j["best_theta"] = theta;
        out += j.dump() + "\n";
    }
    return out;
}

namespace benchmarks {

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (1.0 - x[i]) * (1.0 - x[i]);
    return s;
}

double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
    return s;
}

}  // namespace benchmarks

}  // namespace adeqvaet::ade
