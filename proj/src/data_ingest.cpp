#include "adeqvaet/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
        if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
}

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                        [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

DatasetSchema DatasetSchema::jm1_default() {
    DatasetSchema s;
    s.feature_names = {"loc",       "v(g)",      "ev(g)",     "iv(g)",      "n",
                       "v",         "l",         "d",         "i",          "e",
                       "b",         "t",         "lOCode",    "lOComment",  "lOBlank",
                       "locCodeAndComment",      "uniq_Op",   "uniq_Opnd",  "total_Op",
                       "total_Opnd", "branchCount"};
    s.label_name = "defects";
    return s;
}

void DatasetSchema::validate() const {
    if (feature_names.empty()) throw InvalidSchema("schema has no feature columns");
    if (std::find(feature_names.begin(), feature_names.end(), label_name) != feature_names.end())
        throw InvalidSchema("label column '" + label_name + "' is also listed as a feature");
    if (positive_token == negative_token)
        throw InvalidSchema("positive and negative label tokens are identical");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names)
        if (!seen.insert(name).second) throw InvalidSchema("duplicate feature column '" + name + "'");
}

DatasetTable::DatasetTable(DatasetSchema s, std::size_t rows)
    : schema(std::move(s)),
      n_rows(rows),
      n_cols(schema.feature_names.size()),
      features(rows * n_cols, 0.0),
      missing(rows * n_cols, 0),
      labels(rows, 0) {}

std::vector<double> DatasetTable::row(std::size_t r) const {
    return {features.begin() + static_cast<std::ptrdiff_t>(r * n_cols),
            features.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols)};
}

void DatasetTable::push_row(const std::vector<double>& values, int label,
                            const std::vector<std::uint8_t>& mask) {
    if (values.size() != n_cols) throw DimensionMismatch("row width does not match table");
    if (!mask.empty() && mask.size() != n_cols) throw DimensionMismatch("mask width does not match table");
    features.insert(features.end(), values.begin(), values.end());
    if (mask.empty())
        missing.insert(missing.end(), n_cols, 0);
    else
        missing.insert(missing.end(), mask.begin(), mask.end());
    labels.push_back(label);
    ++n_rows;
}

DatasetTable DatasetTable::select_rows(const std::vector<std::size_t>& rows) const {
    DatasetTable out(schema, 0);
    out.features.reserve(rows.size() * n_cols);
    out.missing.reserve(rows.size() * n_cols);
    out.labels.reserve(rows.size());
    for (auto r : rows) {
        const auto begin = static_cast<std::ptrdiff_t>(r * n_cols);
        const auto end = begin + static_cast<std::ptrdiff_t>(n_cols);
        out.features.insert(out.features.end(), features.begin() + begin, features.begin() + end);
        out.missing.insert(out.missing.end(), missing.begin() + begin, missing.begin() + end);
        out.labels.push_back(labels[r]);
    }
    out.n_rows = rows.size();
    return out;
}

bool DatasetTable::has_missing() const {
    return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

void DatasetTable::validate() const {
    if (n_cols != schema.feature_names.size())
        throw DimensionMismatch("column count does not match schema");
    if (features.size() != n_rows * n_cols || missing.size() != n_rows * n_cols ||
        labels.size() != n_rows)
        throw DimensionMismatch("table buffers disagree on row count");
    for (int y : labels)
        if (y != 0 && y != 1) throw InvalidSchema("label outside {0,1}");
}

DatasetTable parse_csv(const std::string& text, const DatasetSchema& schema) {
    schema.validate();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line) && blank(line)) {
    }
    if (blank(line)) throw FormatError("CSV has no header row");

    const auto header = split_commas(line);
    std::unordered_map<std::string_view, std::size_t> where;
    for (std::size_t i = 0; i < header.size(); ++i) where.emplace(header[i], i);

    auto locate = [&](const std::string& name) {
        const auto it = where.find(name);
        if (it == where.end()) throw MissingColumn(name);
        return it->second;
    };
    std::vector<std::size_t> feature_pos;
    feature_pos.reserve(schema.feature_names.size());
    for (const auto& name : schema.feature_names) feature_pos.push_back(locate(name));
    const std::size_t label_pos = locate(schema.label_name);

    DatasetTable table(schema, 0);
    std::vector<double> values(feature_pos.size());
    std::vector<std::uint8_t> mask(feature_pos.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        const auto cells = split_commas(line);
        for (std::size_t c = 0; c < feature_pos.size(); ++c) {
            const std::size_t pos = feature_pos[c];
            if (pos >= cells.size()) throw UnparseableCell(row, pos, "");
            const auto cell = cells[pos];
            if (cell == schema.missing_token) {
                values[c] = 0.0;
                mask[c] = 1;
                continue;
            }
            double v = 0.0;
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
                throw UnparseableCell(row, pos, std::string(cell));
            values[c] = v;
            mask[c] = 0;
        }
        if (label_pos >= cells.size()) throw UnknownLabelToken(row, "");
        const auto token = cells[label_pos];
        int label;
        if (iequals(token, schema.positive_token))
            label = 1;
        else if (iequals(token, schema.negative_token))
            label = 0;
        else
            throw UnknownLabelToken(row, std::string(token));
        table.push_row(values, label, mask);
        ++row;
    }
    return table;
}

DatasetTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open data file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string to_csv(const DatasetTable& table) {
    std::ostringstream out;
    char buf[32];
    for (const auto& name : table.schema.feature_names) out << name << ',';
    out << table.schema.label_name << '\n';
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        for (std::size_t c = 0; c < table.n_cols; ++c) {
            if (table.is_missing(r, c))
                out << table.schema.missing_token;
            else
                out << std::string_view(buf, std::to_chars(buf, buf + sizeof buf, table.at(r, c)).ptr);
            out << ',';
        }
        out << (table.labels[r] == 1 ? table.schema.positive_token : table.schema.negative_token)
            << '\n';
    }
    return out.str();
}

ClassCounts class_counts(const DatasetTable& table) {
    ClassCounts counts;
    for (int y : table.labels) (y == 1 ? counts.n_pos : counts.n_neg)++;
    return counts;
}

SplitPair stratified_split(const DatasetTable& table, int tp, std::uint64_t seed) {
    if (tp < 1 || tp > 99) throw InvalidConfig("training percentage must be in 1..99");
    const auto counts = class_counts(table);
    if (counts.n_pos == 0 || counts.n_neg == 0)
        throw SingleClassDataset("stratified split needs both classes present");

    const std::size_t n = table.n_rows;
    const auto utp = static_cast<std::size_t>(tp);
    // round-half-up of n * tp / 100 in integer arithmetic
    const std::size_t target = (2 * n * utp + 100) / 200;

    std::size_t class_size[2] = {counts.n_neg, counts.n_pos};
    std::size_t take[2];
    std::size_t frac[2];
    for (int c = 0; c < 2; ++c) {
        take[c] = class_size[c] * utp / 100;
        frac[c] = class_size[c] * utp % 100;
    }
    std::size_t extra = target - take[0] - take[1];
    int order[2] = {0, 1};
    if (frac[1] > frac[0]) std::swap(order[0], order[1]);
    for (int c : order) {
        if (extra == 0) break;
        if (frac[c] == 0) continue;
        ++take[c];
        --extra;
    }

    Rng rng(seed);
    SplitPair out;
    out.tp = tp;
    out.seed = seed;
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> members;
        members.reserve(class_size[c]);
        for (std::size_t r = 0; r < n; ++r)
            if (table.labels[r] == c) members.push_back(r);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.index(i)]);
        out.train_rows.insert(out.train_rows.end(), members.begin(),
                              members.begin() + static_cast<std::ptrdiff_t>(take[c]));
        out.test_rows.insert(out.test_rows.end(),
                             members.begin() + static_cast<std::ptrdiff_t>(take[c]), members.end());
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = table.select_rows(out.train_rows);
    out.test = table.select_rows(out.test_rows);
    return out;
}

}  // namespace adeqvaet
