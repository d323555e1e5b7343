#pragma once

#include <cstddef>
#include <cstdint>

#include "adeqvaet/data_ingest.hpp"

namespace adeqvaet {

/// Gaussian blobs whose means depend on the label, rescaled per column so the
/// numbers look like code metrics. Used for tests and demos.
struct ToyDataOptions {
    std::size_t rows = 500;
    std::size_t features = 8;        // named after the first JM1 columns
    double positive_fraction = 0.2;
    double separation = 2.0;         // mean shift of the positive class, in stddevs
    std::size_t missing_cells = 10;  // written as "?"
    std::size_t duplicate_rows = 5;  // exact copies of other rows with the same label
    std::uint64_t seed = 7;
};

DatasetSchema toy_schema(std::size_t features);

DatasetTable make_toy_dataset(const ToyDataOptions& opt = {});

}  // namespace adeqvaet
