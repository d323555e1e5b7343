#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace adeqvaet {

/// Column layout and label tokens of a metrics CSV.
struct DatasetSchema {
    std::vector<std::string> feature_names;
    std::string label_name = "defects";
    std::string positive_token = "true";
    std::string negative_token = "false";
    std::string missing_token = "?";

    /// The 21 numeric metric columns of the NASA JM1 export with label "defects".
    static DatasetSchema jm1_default();

    /// Throws InvalidSchema when the invariants do not hold.
    void validate() const;

    friend bool operator==(const DatasetSchema&, const DatasetSchema&) = default;
};

/// Dense row-major table of software metrics with binary defect labels.
/// Missing cells hold 0.0 and are flagged in `missing`.
struct DatasetTable {
    DatasetSchema schema;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> features;       // n_rows * n_cols
    std::vector<std::uint8_t> missing;  // n_rows * n_cols, 1 = missing
    std::vector<int> labels;            // n_rows, values in {0, 1}

    DatasetTable() = default;
    DatasetTable(DatasetSchema schema, std::size_t rows);

    double& at(std::size_t r, std::size_t c) { return features[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return features[r * n_cols + c]; }
    bool is_missing(std::size_t r, std::size_t c) const { return missing[r * n_cols + c] != 0; }

    /// Copy of the row-major feature slice of row r.
    std::vector<double> row(std::size_t r) const;

    /// Append one row. `mask` may be empty (no missing cells).
    void push_row(const std::vector<double>& values, int label,
                  const std::vector<std::uint8_t>& mask = {});

    /// New table holding the given rows, in the given order.
    DatasetTable select_rows(const std::vector<std::size_t>& rows) const;

    bool has_missing() const;

    /// Checks shape and label invariants; throws DimensionMismatch or InvalidSchema.
    void validate() const;

    friend bool operator==(const DatasetTable&, const DatasetTable&) = default;
};

struct SplitPair {
    DatasetTable train;
    DatasetTable test;
    std::vector<std::size_t> train_rows;  // source row indices, ascending
    std::vector<std::size_t> test_rows;
    int tp = 0;
    std::uint64_t seed = 0;
};

/// Parse a header-first CSV; columns are reordered to follow `schema`.
DatasetTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema);

/// Same as load_csv, reading from an in-memory string.
DatasetTable parse_csv(const std::string& text, const DatasetSchema& schema);

/// Write a table back to CSV using its schema tokens.
std::string to_csv(const DatasetTable& table);

struct ClassCounts {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts class_counts(const DatasetTable& table);

/// Per-class split preserving class proportions. Train size per class is
/// floor(count * tp / 100); the leftover rows needed to reach
/// round(rows * tp / 100) go to the classes with the largest fractional
/// parts (ties to the lower label).
SplitPair stratified_split(const DatasetTable& table, int tp, std::uint64_t seed);

}  // namespace adeqvaet
