#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adeqvaet/ade.hpp"
#include "adeqvaet/data_ingest.hpp"
#include "adeqvaet/eval.hpp"

namespace adeqvaet {

inline constexpr int kConfigVersion = 1;

/// Hyperparameter tuning settings on top of the optimiser itself.
struct TuneSettings {
    ade::AdeConfig ade;
    ade::SearchSpace space;
    int inner_tp = 80;                  // inner train share of the real training rows
    std::size_t classifier_epochs = 40;  // per candidate evaluation
};

/// Everything one experiment needs. Paths are relative to the working directory.
struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path out = "out";
    std::optional<std::vector<std::string>> features;  // empty => every non-label CSV column
    DatasetSchema schema;                              // tokens and label name; features filled at load
    eval::PipelineConfig pipeline;
    TuneSettings tune;
    int tp = 90;  // split used by preprocess/train/tune
    std::vector<int> tps = {40, 50, 60, 70, 80, 90};
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::optional<std::filesystem::path> tuned_theta;  // best_theta.json applied to the classifier

    void validate() const;
};

/// Strict parse: unknown keys, wrong types and a missing or different
/// "version" throw ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the fields that influence results (not out, threads).
std::string canonical_config(const RunConfig& cfg);

/// Hex FNV-1a of canonical_config.
std::string config_hash(const RunConfig& cfg);

/// Default search space: classifier lr, weight decay (both log-scaled) and
/// encoder depth.
ade::SearchSpace default_search_space();

/// Applies a decoded theta (named by search-space dimension) to the pipeline.
void apply_theta(eval::PipelineConfig& pipeline, const ade::SearchSpace& space, const std::vector<double>& theta);

/// Reads a best_theta.json written by the tune command and applies it.
void apply_theta_file(eval::PipelineConfig& pipeline, const std::filesystem::path& path);

}  // namespace adeqvaet
