#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "adeqvaet/config.hpp"
#include "adeqvaet/data_ingest.hpp"

namespace adeqvaet::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

/// Loads the config, applies the overrides and validates the result.
RunConfig resolve_config(const std::filesystem::path& config_path, const Overrides& overrides);

/// Reads the configured CSV; without an explicit feature list every column
/// except the label is a feature, in header order.
DatasetTable load_dataset(const RunConfig& cfg);

/// Stage directories below cfg.out.
std::filesystem::path stage_dir(const RunConfig& cfg, const char* stage);

/// <out>/preprocess: preprocessed.bin, report.json
void cmd_preprocess(const RunConfig& cfg);

/// <out>/train: qvae.params, qvae.json, classifier.params, classifier.json,
/// training_log.json. Needs the preprocess artifacts.
void cmd_train(const RunConfig& cfg);

/// <out>/tune: best_theta.json, ade_history.jsonl, evaluations.jsonl.
/// Needs the preprocess artifacts.
void cmd_tune(const RunConfig& cfg);

/// <out>/evaluate: report.json, report.csv, report.md, run_info.json.
void cmd_evaluate(const RunConfig& cfg, const std::optional<std::filesystem::path>& baselines);

/// Writes the bundled synthetic dataset as CSV.
void cmd_gen_toy_data(const std::filesystem::path& out, std::uint64_t seed, std::size_t rows);

}  // namespace adeqvaet::cli
