#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adeqvaet/anra.hpp"
#include "adeqvaet/data_ingest.hpp"
#include "adeqvaet/qvae.hpp"
#include "adeqvaet/transformer.hpp"

namespace adeqvaet::eval {

/// Positive class = defective = 1.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels);

inline const char* const kProposedModel = "Proposed ADE-QVAET";

struct MetricsRow {
    std::string model = kProposedModel;
    int tp_percent = 0;
    std::optional<std::size_t> epoch;  // empty = final model
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionMatrix counts;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Degenerate denominators give 0. Throws EmptyMatrix when total is 0.
MetricsRow metrics(const ConfusionMatrix& cm);

struct PipelineConfig {
    anra::PreprocessConfig preprocess;
    qvae::QvaeConfig qvae;
    qvae::QvaeTrainOptions qvae_train;
    transformer::TransformerConfig classifier;
    transformer::ClassifierTrainOptions classifier_train;  // checkpoints live here
};

/// Independent seeds for each stochastic stage, derived from one master seed.
struct PipelineSeeds {
    std::uint64_t split = 0;
    std::uint64_t preprocess = 0;
    std::uint64_t qvae = 0;
    std::uint64_t classifier = 0;
    std::uint64_t ade = 0;

    static PipelineSeeds from_master(std::uint64_t master);
    friend bool operator==(const PipelineSeeds&, const PipelineSeeds&) = default;
};

struct TrainedPipeline {
    qvae::QvaeModel qvae;
    transformer::ClassifierModel classifier;
    std::vector<double> qvae_loss;
    std::vector<double> classifier_loss;
    std::vector<MetricsRow> rows;  // checkpoints in epoch order, then the final row
};

/// QVAE on the preprocessed training rows, encode both splits, train the
/// classifier and score the held-out rows at each checkpoint and at the end.
TrainedPipeline train_and_evaluate(const DatasetTable& train, const DatasetTable& test, const PipelineConfig& cfg,
                                   const PipelineSeeds& seeds, int tp);

struct SweepReport {
    std::vector<MetricsRow> rows;
    PipelineSeeds seeds;
    std::string config_hash;
    double wall_time_s = 0.0;  // not part of the canonical JSON

    friend bool operator==(const SweepReport& a, const SweepReport& b) {
        return a.rows == b.rows && a.seeds == b.seeds && a.config_hash == b.config_hash;
    }
};

/// split -> preprocess -> QVAE -> classifier -> metrics, for every tp.
/// Different tp values may run on separate threads; rows are ordered by
/// (tp as given, epoch) regardless.
SweepReport tp_sweep(const DatasetTable& dataset, const std::vector<int>& tps, const PipelineConfig& cfg,
                     std::uint64_t master_seed, std::size_t threads = 1);

enum class ReportFormat { csv, markdown, json };

/// "csv", "markdown"/"md", "json"; anything else throws UnknownFormat.
ReportFormat parse_format(const std::string& name);

/// Externally supplied comparison numbers (percentages).
struct BaselineRow {
    std::string model;
    int tp = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// CSV with header model,tp,accuracy,precision,recall,f1; values in percent,
/// an optional trailing '%' is accepted.
std::vector<BaselineRow> parse_baselines_csv(const std::string& text);

/// Baselines for one tp in comparison-table order: SVM, DT, RF, LR, QVA, DE,
/// then any other labels in file order.
std::vector<BaselineRow> ordered_baselines(const std::vector<BaselineRow>& all, int tp);

/// Throws EmptyReport on a report without rows. Baselines are merged into
/// the markdown and CSV renderings only; JSON is the report verbatim.
std::string render_report(const SweepReport& report, ReportFormat format,
                          const std::vector<BaselineRow>& baselines = {});

SweepReport parse_report_json(const std::string& text);

}  // namespace adeqvaet::eval
