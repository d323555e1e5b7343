#include "adeqvaet/anra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet::anra {

void PreprocessConfig::validate() const {
    if (!(winsor_k >= 0.0)) throw InvalidConfig("winsor_k must be >= 0");
    if (smote_k < 1) throw InvalidConfig("smote_k must be >= 1");
    if (!(target_ratio > 0.0)) throw InvalidConfig("target_ratio must be > 0");
}

DatasetTable deduplicate(const DatasetTable& table) {
    std::map<std::vector<double>, bool> seen;
    std::vector<std::size_t> keep;
    std::vector<double> key(2 * table.n_cols + 1);
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        for (std::size_t c = 0; c < table.n_cols; ++c) {
            // +0.0 normalizes negative zero
            key[c] = table.at(r, c) + 0.0;
            key[table.n_cols + c] = table.is_missing(r, c) ? 1.0 : 0.0;
        }
        key.back() = table.labels[r];
        if (seen.emplace(key, true).second) keep.push_back(r);
    }
    return table.select_rows(keep);
}

double interpolated_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw TooFewRows("quantile of an empty column");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> column_medians(const DatasetTable& table) {
    std::vector<double> medians(table.n_cols);
    std::vector<double> observed;
    for (std::size_t c = 0; c < table.n_cols; ++c) {
        observed.clear();
        for (std::size_t r = 0; r < table.n_rows; ++r)
            if (!table.is_missing(r, c)) observed.push_back(table.at(r, c));
        if (observed.empty()) throw AllMissingColumn(c);
        std::sort(observed.begin(), observed.end());
        medians[c] = interpolated_quantile(observed, 0.5);
    }
    return medians;
}

DatasetTable fill_missing(const DatasetTable& table, const std::vector<double>& fill) {
    if (fill.size() != table.n_cols) throw DimensionMismatch("fill values do not match columns");
    DatasetTable out = table;
    for (std::size_t r = 0; r < out.n_rows; ++r)
        for (std::size_t c = 0; c < out.n_cols; ++c)
            if (out.is_missing(r, c)) out.at(r, c) = fill[c];
    std::fill(out.missing.begin(), out.missing.end(), 0);
    return out;
}

DatasetTable impute_missing(const DatasetTable& table, ImputePolicy policy) {
    switch (policy) {
        case ImputePolicy::median:
            if (!table.has_missing()) return table;
            return fill_missing(table, column_medians(table));
    }
    return table;
}

WinsorizeResult winsorize(const DatasetTable& table, double k) {
    if (table.n_rows < 4) throw TooFewRows("winsorize needs at least 4 rows");
    WinsorizeResult out{table, 0};
    std::vector<double> column(table.n_rows);
    for (std::size_t c = 0; c < table.n_cols; ++c) {
        for (std::size_t r = 0; r < table.n_rows; ++r) column[r] = table.at(r, c);
        std::sort(column.begin(), column.end());
        const double q1 = interpolated_quantile(column, 0.25);
        const double q3 = interpolated_quantile(column, 0.75);
        const double iqr = q3 - q1;
        const double lower = q1 - k * iqr;
        const double upper = q3 + k * iqr;
        for (std::size_t r = 0; r < table.n_rows; ++r) {
            double& v = out.table.at(r, c);
            if (v < lower) {
                v = lower;
                ++out.cells_clipped;
            } else if (v > upper) {
                v = upper;
                ++out.cells_clipped;
            }
        }
    }
    return out;
}

StandardizeResult standardize(const DatasetTable& table) {
    ScalerStats stats;
    stats.mean.assign(table.n_cols, 0.0);
    stats.stddev.assign(table.n_cols, 0.0);
    stats.zero.assign(table.n_cols, 0);
    const auto n = static_cast<double>(table.n_rows);
    for (std::size_t c = 0; c < table.n_cols && table.n_rows > 0; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < table.n_rows; ++r) sum += table.at(r, c);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < table.n_rows; ++r) {
            const double d = table.at(r, c) - mean;
            ss += d * d;
        }
        stats.mean[c] = mean;
        stats.stddev[c] = std::sqrt(ss / n);
        stats.zero[c] = stats.stddev[c] == 0.0 ? 1 : 0;
    }
    return {apply_scaler(table, stats), std::move(stats)};
}

DatasetTable apply_scaler(const DatasetTable& table, const ScalerStats& stats) {
    if (stats.mean.size() != table.n_cols || stats.stddev.size() != table.n_cols ||
        stats.zero.size() != table.n_cols)
        throw DimensionMismatch("scaler has " + std::to_string(stats.mean.size()) +
                                " columns, table has " + std::to_string(table.n_cols));
    DatasetTable out = table;
    for (std::size_t r = 0; r < out.n_rows; ++r)
        for (std::size_t c = 0; c < out.n_cols; ++c) {
            double& v = out.at(r, c);
            v = stats.zero[c] ? 0.0 : (v - stats.mean[c]) / stats.stddev[c];
        }
    return out;
}

namespace {

double squared_distance(const DatasetTable& t, std::size_t a, std::size_t b) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < t.n_cols; ++c) {
        const double d = t.at(a, c) - t.at(b, c);
        d2 += d * d;
    }
    return d2;
}

}  // namespace

SmoteResult smote_balance(const DatasetTable& table, const PreprocessConfig& cfg) {
    cfg.validate();
    const auto counts = class_counts(table);
    // Ties make the defect class the one to grow.
    const int minority_label = counts.n_pos <= counts.n_neg ? 1 : 0;
    const std::size_t minority = std::min(counts.n_pos, counts.n_neg);
    const std::size_t majority = std::max(counts.n_pos, counts.n_neg);
    const auto target = static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(majority)));

    SmoteResult out{table, 0, {}};
    if (target <= minority) return out;
    if (minority < 2)
        throw MinorityTooSmall("SMOTE needs at least 2 minority rows, found " + std::to_string(minority));

    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < table.n_rows; ++r)
        if (table.labels[r] == minority_label) members.push_back(r);
    const std::size_t k = std::min(cfg.smote_k, minority - 1);

    // Neighbour lists are built lazily; ties in distance go to the lower row.
    std::vector<std::vector<std::size_t>> neighbours(members.size());
    auto neighbours_of = [&](std::size_t i) -> const std::vector<std::size_t>& {
        auto& list = neighbours[i];
        if (!list.empty()) return list;
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(members.size() - 1);
        for (std::size_t j = 0; j < members.size(); ++j)
            if (j != i) cand.emplace_back(squared_distance(table, members[i], members[j]), j);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t j = 0; j < k; ++j) list.push_back(cand[j].second);
        return list;
    };

    Rng rng(cfg.seed);
    const std::size_t needed = target - minority;
    std::vector<double> synth(table.n_cols);
    out.origins.reserve(needed);
    for (std::size_t s = 0; s < needed; ++s) {
        const std::size_t i = rng.index(members.size());
        const std::size_t j = neighbours_of(i)[rng.index(k)];
        const double u = rng.uniform();
        const std::size_t a = members[i];
        const std::size_t b = members[j];
        for (std::size_t c = 0; c < table.n_cols; ++c)
            synth[c] = table.at(a, c) + u * (table.at(b, c) - table.at(a, c));
        out.table.push_row(synth, minority_label);
        out.origins.push_back({a, b, u});
    }
    out.synthetic_rows = needed;
    return out;
}

PreprocessResult preprocess(const DatasetTable& table, const PreprocessConfig& cfg) {
    cfg.validate();
    table.validate();
    PreprocessResult out;
    out.report.rows_in = table.n_rows;

    DatasetTable deduped = deduplicate(table);
    out.report.duplicates_removed = table.n_rows - deduped.n_rows;

    out.medians = column_medians(deduped);
    out.report.cells_imputed = static_cast<std::size_t>(
        std::count_if(deduped.missing.begin(), deduped.missing.end(), [](auto m) { return m != 0; }));
    DatasetTable imputed = fill_missing(deduped, out.medians);

    auto clipped = winsorize(imputed, cfg.winsor_k);
    out.report.cells_winsorized = clipped.cells_clipped;

    auto scaled = standardize(clipped.table);
    out.stats = std::move(scaled.stats);

    auto balanced = smote_balance(scaled.table, cfg);
    out.report.synthetic_rows_added = balanced.synthetic_rows;
    out.table = std::move(balanced.table);
    out.report.rows_out = out.table.n_rows;
    return out;
}

DatasetTable transform_heldout(const DatasetTable& table, const PreprocessResult& fitted) {
    return apply_scaler(fill_missing(table, fitted.medians), fitted.stats);
}

}  // namespace adeqvaet::anra
