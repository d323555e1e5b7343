#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "adeqvaet/anra.hpp"
#include "adeqvaet/data_ingest.hpp"

namespace adeqvaet {

/// Output of the preprocess command: the fitted training table (real rows
/// first, SMOTE rows after), the held-out rows transformed with the training
/// statistics, and what is needed to transform further rows.
struct PreprocessedArtifact {
    int tp = 0;
    std::uint64_t split_seed = 0;
    DatasetTable train;
    DatasetTable test;
    std::size_t n_real_train = 0;
    std::vector<double> medians;
    anra::ScalerStats stats;
    anra::PreprocessReport report;

    friend bool operator==(const PreprocessedArtifact&, const PreprocessedArtifact&) = default;
};

/// Little-endian binary with an "ADQP" magic and a format version.
std::string serialize_preprocessed(const PreprocessedArtifact& a);
PreprocessedArtifact deserialize_preprocessed(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

/// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace adeqvaet
