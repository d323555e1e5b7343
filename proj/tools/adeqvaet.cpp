// adeqvaet: preprocess, train, tune and evaluate the defect-prediction pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "adeqvaet/ade.hpp"
#include "adeqvaet/commands.hpp"
#include "adeqvaet/error.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("adeqvaet");
    logger->set_pattern("[%H:%M:%S] [%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    const char* env = std::getenv("ADEQVAET_LOG");
    if (!env) return;
    const std::string level = env;
    if (level == "error")
        spdlog::set_level(spdlog::level::err);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else if (level != "info")
        spdlog::warn("ignoring ADEQVAET_LOG={} (expected error, info or debug)", level);
}

int report_failure(const std::string& kind, const std::string& message) {
    nlohmann::ordered_json j = {{"error", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Software defect prediction: ANRA preprocessing, quantum VAE features, transformer classifier, ADE tuning"};
    app.require_subcommand(1);

    std::string config_path;
    adeqvaet::cli::Overrides overrides;
    std::string data, out, baselines;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--data", data, "dataset CSV (overrides config)");
        cmd->add_option("--out", out, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "master seed (overrides config)");
        cmd->add_option("--threads", threads, "worker cap (overrides config)")->check(CLI::PositiveNumber);
    };

    auto* preprocess = app.add_subcommand("preprocess", "split, clean, scale and balance the training data");
    auto* train = app.add_subcommand("train", "train the quantum VAE and the transformer classifier");
    auto* tune = app.add_subcommand("tune", "search classifier hyperparameters with adaptive differential evolution");
    auto* evaluate = app.add_subcommand("evaluate", "run the training-percentage sweep and write reports");
    for (auto* cmd : {preprocess, train, tune, evaluate}) add_common(cmd);
    evaluate->add_option("--baselines", baselines, "CSV of comparison rows merged into the reports");

    auto* toy = app.add_subcommand("gen-toy-data", "write the synthetic demo dataset");
    std::string toy_out;
    std::uint64_t toy_seed = 7;
    std::size_t toy_rows = 500;
    toy->add_option("--out", toy_out, "CSV path to write")->required();
    toy->add_option("--seed", toy_seed, "generator seed");
    toy->add_option("--rows", toy_rows, "number of rows")->check(CLI::Range(4, 10000000));

    auto* bench = app.add_subcommand("bench", "run the optimiser on a test function; history as JSON lines on stdout");
    std::string function = "sphere";
    std::size_t dim = 5, pop = 30, gens = 300;
    std::uint64_t bench_seed = 0;
    bench->add_option("--function", function, "test function")->check(CLI::IsMember({"sphere", "rosenbrock", "rastrigin"}));
    bench->add_option("--dim", dim, "dimension")->check(CLI::PositiveNumber);
    bench->add_option("--pop", pop, "population size")->check(CLI::Range(4, 100000));
    bench->add_option("--gens", gens, "generations");
    bench->add_option("--seed", bench_seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (toy->parsed()) {
            adeqvaet::cli::cmd_gen_toy_data(toy_out, toy_seed, toy_rows);
            return 0;
        }
        if (bench->parsed()) {
            namespace ade = adeqvaet::ade;
            ade::AdeConfig cfg;
            cfg.pop_size = pop;
            cfg.max_generations = gens;
            cfg.patience = 0;
            cfg.seed = bench_seed;
            const auto f = function == "sphere"       ? ade::benchmarks::sphere
                           : function == "rosenbrock" ? ade::benchmarks::rosenbrock
                                                      : ade::benchmarks::rastrigin;
            const double half = function == "rosenbrock" ? 2.048 : 5.12;
            const auto space = ade::SearchSpace::box(dim, -half, half);
            const auto result = ade::minimize(f, space, cfg);
            std::cout << ade::history_jsonl(result, space);
            spdlog::info("{} d={}: best {:.6g} after {} generations", function, dim, result.best_value,
                         result.generations_run);
            return 0;
        }
        CLI::App* cmd = app.get_subcommands().front();
        if (!data.empty()) overrides.data = data;
        if (!out.empty()) overrides.out = out;
        if (cmd->count("--seed")) overrides.seed = seed;
        if (cmd->count("--threads")) overrides.threads = threads;
        const auto cfg = adeqvaet::cli::resolve_config(config_path, overrides);

        if (cmd == preprocess)
            adeqvaet::cli::cmd_preprocess(cfg);
        else if (cmd == train)
            adeqvaet::cli::cmd_train(cfg);
        else if (cmd == tune)
            adeqvaet::cli::cmd_tune(cfg);
        else
            adeqvaet::cli::cmd_evaluate(cfg, baselines.empty() ? std::nullopt
                                                               : std::optional<std::filesystem::path>(baselines));
        return 0;
    } catch (const adeqvaet::Error& e) {
        return report_failure(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report_failure("InternalError", e.what());
    }
}
