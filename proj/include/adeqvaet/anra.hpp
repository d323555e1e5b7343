#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adeqvaet/data_ingest.hpp"

namespace adeqvaet::anra {

enum class ImputePolicy { median };

struct PreprocessConfig {
    double winsor_k = 3.0;  // IQR multiplier for the clipping fences
    std::size_t smote_k = 5;
    ImputePolicy impute_policy = ImputePolicy::median;
    double target_ratio = 1.0;  // minority / majority after augmentation
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScalerStats {
    std::vector<double> mean;
    std::vector<double> stddev;      // population
    std::vector<std::uint8_t> zero;  // 1 where stddev == 0

    friend bool operator==(const ScalerStats&, const ScalerStats&) = default;
};

struct PreprocessReport {
    std::size_t rows_in = 0;
    std::size_t duplicates_removed = 0;
    std::size_t cells_imputed = 0;
    std::size_t cells_winsorized = 0;
    std::size_t synthetic_rows_added = 0;
    std::size_t rows_out = 0;

    friend bool operator==(const PreprocessReport&, const PreprocessReport&) = default;
};

/// Keeps the first occurrence of every exact (features, missing mask, label) row.
DatasetTable deduplicate(const DatasetTable& table);

/// Per-column median of the observed (non-missing) cells.
std::vector<double> column_medians(const DatasetTable& table);

/// Replaces masked cells with `fill[col]` and clears the mask.
DatasetTable fill_missing(const DatasetTable& table, const std::vector<double>& fill);

/// Median imputation; throws AllMissingColumn for a column with no observed cell.
DatasetTable impute_missing(const DatasetTable& table, ImputePolicy policy = ImputePolicy::median);

/// Quantile of an ascending-sorted range by linear interpolation at q * (n - 1).
double interpolated_quantile(const std::vector<double>& sorted, double q);

struct WinsorizeResult {
    DatasetTable table;
    std::size_t cells_clipped = 0;
};

/// Clip each column to [Q1 - k*IQR, Q3 + k*IQR].
WinsorizeResult winsorize(const DatasetTable& table, double k);

struct StandardizeResult {
    DatasetTable table;
    ScalerStats stats;
};

StandardizeResult standardize(const DatasetTable& table);

DatasetTable apply_scaler(const DatasetTable& table, const ScalerStats& stats);

struct SmoteResult {
    DatasetTable table;  // input rows followed by the synthetic rows
    std::size_t synthetic_rows = 0;
    // Provenance of each synthetic row: source row indices and the
    // interpolation weight, so that row = a + u * (b - a).
    struct Origin {
        std::size_t a;
        std::size_t b;
        double u;
    };
    std::vector<Origin> origins;
};

/// Oversample the minority class to round(target_ratio * majority).
SmoteResult smote_balance(const DatasetTable& table, const PreprocessConfig& cfg);

struct PreprocessResult {
    DatasetTable table;
    ScalerStats stats;
    PreprocessReport report;
    std::vector<double> medians;  // imputation values, reused for held-out rows
};

/// dedup -> impute -> winsorize -> standardize -> SMOTE. Training split only.
PreprocessResult preprocess(const DatasetTable& table, const PreprocessConfig& cfg);

/// Transform held-out rows with statistics fitted on the training split:
/// missing cells take the training medians, then the training scaler applies.
DatasetTable transform_heldout(const DatasetTable& table, const PreprocessResult& fitted);

}  // namespace adeqvaet::anra
