#include "adeqvaet/toy_data.hpp"

#include <cmath>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet {

DatasetSchema toy_schema(std::size_t features) {
    const auto jm1 = DatasetSchema::jm1_default();
    if (features == 0 || features > jm1.feature_names.size())
        throw InvalidConfig("toy data supports 1.." + std::to_string(jm1.feature_names.size()) + " features");
    DatasetSchema schema = jm1;
    schema.feature_names.resize(features);
    return schema;
}

DatasetTable make_toy_dataset(const ToyDataOptions& opt) {
    if (opt.rows < 4) throw InvalidConfig("toy data needs at least 4 rows");
    if (!(opt.positive_fraction > 0.0 && opt.positive_fraction < 1.0))
        throw InvalidConfig("positive_fraction must be in (0, 1)");
    const auto schema = toy_schema(opt.features);
    Rng rng(opt.seed);

    const auto n_pos = static_cast<std::size_t>(std::llround(opt.positive_fraction * static_cast<double>(opt.rows)));
    std::vector<int> labels(opt.rows, 0);
    for (std::size_t i = 0; i < n_pos; ++i) labels[i] = 1;
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);

    // Column c lives around offset * (c + 1) with spread scale * (c + 1).
    DatasetTable table(schema, 0);
    for (std::size_t r = 0; r < opt.rows; ++r) {
        std::vector<double> row(opt.features);
        for (std::size_t c = 0; c < opt.features; ++c) {
            const double z = rng.normal() + (labels[r] == 1 ? opt.separation : 0.0);
            const double spread = 4.0 * static_cast<double>(c + 1);
            row[c] = std::round((20.0 * static_cast<double>(c + 1) + spread * z) * 1000.0) / 1000.0;
        }
        table.push_row(row, labels[r]);
    }

    for (std::size_t d = 0; d < opt.duplicate_rows; ++d) {
        const std::size_t dst = rng.index(opt.rows);
        std::size_t src = rng.index(opt.rows);
        while (src == dst || labels[src] != labels[dst]) src = rng.index(opt.rows);
        for (std::size_t c = 0; c < opt.features; ++c) table.at(dst, c) = table.at(src, c);
    }

    for (std::size_t m = 0; m < opt.missing_cells; ++m) {
        const std::size_t r = rng.index(opt.rows);
        const std::size_t c = rng.index(opt.features);
        table.at(r, c) = 0.0;
        table.missing[r * opt.features + c] = 1;
    }
    return table;
}

}  // namespace adeqvaet
