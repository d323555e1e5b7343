#include "adeqvaet/artifacts.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "adeqvaet/error.hpp"

namespace adeqvaet {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'Q', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "artifact I/O assumes a little-endian host");

class Writer {
public:
    template <typename T>
    void pod(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void u64(std::uint64_t v) { pod(v); }
    void str(const std::string& s) {
        u64(s.size());
        out_ += s;
    }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        for (double d : v) pod(d);
    }
    void bytes(const std::vector<std::uint8_t>& v) {
        u64(v.size());
        out_.append(reinterpret_cast<const char*>(v.data()), v.size());
    }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    std::size_t count() {
        const auto n = u64();
        if (n > s_.size()) throw FormatError("preprocessed artifact: implausible length");
        return static_cast<std::size_t>(n);
    }
    std::string str() {
        const auto n = count();
        need(n);
        std::string v = s_.substr(pos_, n);
        pos_ += n;
        return v;
    }
    std::vector<double> doubles() {
        const auto n = count();
        std::vector<double> v(n);
        for (auto& d : v) d = pod<double>();
        return v;
    }
    std::vector<std::uint8_t> bytes() {
        const auto n = count();
        need(n);
        std::vector<std::uint8_t> v(s_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                    s_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return v;
    }
    void expect(const char* p, std::size_t n) {
        need(n);
        if (s_.compare(pos_, n, p, n) != 0) throw FormatError("not a preprocessed artifact (bad magic)");
        pos_ += n;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > s_.size()) throw FormatError("preprocessed artifact is truncated");
    }
    const std::string& s_;
    std::size_t pos_ = 0;
};

void write_table(Writer& w, const DatasetTable& t) {
    w.u64(t.n_rows);
    w.u64(t.n_cols);
    w.doubles(t.features);
    w.bytes(t.missing);
    w.u64(t.labels.size());
    for (int y : t.labels) w.pod(static_cast<std::int32_t>(y));
}

DatasetTable read_table(Reader& r, const DatasetSchema& schema) {
    DatasetTable t;
    t.schema = schema;
    t.n_rows = r.count();
    t.n_cols = r.count();
    t.features = r.doubles();
    t.missing = r.bytes();
    t.labels.resize(r.count());
    for (int& y : t.labels) y = r.pod<std::int32_t>();
    t.validate();
    return t;
}

}  // namespace

std::string serialize_preprocessed(const PreprocessedArtifact& a) {
    Writer w;
    w.raw(kMagic, 4);
    w.pod(kFormatVersion);
    const auto& s = a.train.schema;
    w.u64(s.feature_names.size());
    for (const auto& f : s.feature_names) w.str(f);
    w.str(s.label_name);
    w.str(s.positive_token);
    w.str(s.negative_token);
    w.str(s.missing_token);
    w.pod(static_cast<std::int32_t>(a.tp));
    w.u64(a.split_seed);
    write_table(w, a.train);
    write_table(w, a.test);
    w.u64(a.n_real_train);
    w.doubles(a.medians);
    w.doubles(a.stats.mean);
    w.doubles(a.stats.stddev);
    w.bytes(a.stats.zero);
    const auto& rep = a.report;
    for (std::size_t v : {rep.rows_in, rep.duplicates_removed, rep.cells_imputed, rep.cells_winsorized,
                          rep.synthetic_rows_added, rep.rows_out})
        w.u64(v);
    return w.take();
}

PreprocessedArtifact deserialize_preprocessed(const std::string& bytes) {
    Reader r(bytes);
    r.expect(kMagic, 4);
    if (r.pod<std::uint32_t>() != kFormatVersion) throw FormatError("unsupported preprocessed artifact version");
    DatasetSchema schema;
    schema.feature_names.resize(r.count());
    for (auto& f : schema.feature_names) f = r.str();
    schema.label_name = r.str();
    schema.positive_token = r.str();
    schema.negative_token = r.str();
    schema.missing_token = r.str();
    PreprocessedArtifact a;
    a.tp = r.pod<std::int32_t>();
    a.split_seed = r.u64();
    a.train = read_table(r, schema);
    a.test = read_table(r, schema);
    a.n_real_train = r.count();
    a.medians = r.doubles();
    a.stats.mean = r.doubles();
    a.stats.stddev = r.doubles();
    a.stats.zero = r.bytes();
    auto& rep = a.report;
    for (std::size_t* v : {&rep.rows_in, &rep.duplicates_removed, &rep.cells_imputed, &rep.cells_winsorized,
                           &rep.synthetic_rows_added, &rep.rows_out})
        *v = r.count();
    if (!r.done()) throw FormatError("trailing bytes in preprocessed artifact");
    if (a.n_real_train > a.train.n_rows) throw FormatError("preprocessed artifact: bad real row count");
    return a;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace adeqvaet
