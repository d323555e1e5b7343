#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "adeqvaet/data_ingest.hpp"
#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

using namespace adeqvaet;

namespace {

DatasetSchema two_col() {
    DatasetSchema s;
    s.feature_names = {"loc", "cc"};
    return s;
}

DatasetTable random_table(std::size_t rows, std::size_t pos, std::uint64_t seed) {
    DatasetSchema s;
    s.feature_names = {"a", "b", "c"};
    DatasetTable t(s, 0);
    Rng r(seed);
    for (std::size_t i = 0; i < rows; ++i) t.push_row({r.normal(), r.normal(), static_cast<double>(i)}, i < pos ? 1 : 0);
    return t;
}

}  // namespace

TEST_CASE("parse a small file") {
    const auto t = parse_csv("loc,cc,defects\n10,2,true\n5,1,false\n", two_col());
    CHECK(t.n_rows == 2);
    CHECK(t.features == std::vector<double>{10, 2, 5, 1});
    CHECK(t.labels == std::vector<int>{1, 0});
    CHECK_FALSE(t.has_missing());
}

TEST_CASE("missing token sets the mask and stores zero") {
    const auto t = parse_csv("loc,cc,defects\n?,2,true\n5,1,false\n", two_col());
    CHECK(t.at(0, 0) == 0.0);
    CHECK(t.is_missing(0, 0));
    CHECK_FALSE(t.is_missing(0, 1));
}

TEST_CASE("unknown label token names the row") {
    try {
        parse_csv("loc,cc,defects\n10,2,true\n5,1,maybe\n", two_col());
        FAIL("expected UnknownLabelToken");
    } catch (const UnknownLabelToken& e) {
        CHECK(e.row() == 1);
        CHECK(std::string(e.what()).find("maybe") != std::string::npos);
    }
}

TEST_CASE("error contracts") {
    CHECK_THROWS_AS(parse_csv("loc,defects\n1,true\n", two_col()), MissingColumn);
    CHECK_THROWS_AS(parse_csv("loc,cc,defects\n1,x1,true\n", two_col()), UnparseableCell);
    CHECK_THROWS_AS(load_csv("/nonexistent/data.csv", two_col()), IoError);
    DatasetSchema bad = two_col();
    bad.label_name = "loc";
    CHECK_THROWS_AS(bad.validate(), InvalidSchema);
    bad = two_col();
    bad.negative_token = bad.positive_token;
    CHECK_THROWS_AS(bad.validate(), InvalidSchema);
}

TEST_CASE("column order follows the schema, not the file") {
    const auto a = parse_csv("loc,cc,defects\n10,2,true\n5,1,false\n", two_col());
    const auto b = parse_csv("defects,cc,loc\ntrue,2,10\nfalse,1,5\n", two_col());
    CHECK(a == b);
}

TEST_CASE("label tokens are configurable") {
    auto s = two_col();
    s.positive_token = "yes";
    s.negative_token = "no";
    const auto t = parse_csv("loc,cc,defects\n1,2,yes\n3,4,NO\n", s);
    CHECK(t.labels == std::vector<int>{1, 0});
}

TEST_CASE("csv round trip through a file") {
    const auto t = random_table(20, 5, 1);
    const auto path = std::filesystem::temp_directory_path() / "adeqvaet_roundtrip.csv";
    {
        std::ofstream out(path);
        out << to_csv(t);
    }
    CHECK(load_csv(path, t.schema) == t);
    std::filesystem::remove(path);
}

TEST_CASE("default schema has 21 metric columns") {
    const auto s = DatasetSchema::jm1_default();
    CHECK(s.feature_names.size() == 21);
    CHECK(s.label_name == "defects");
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("class counts") {
    DatasetSchema s;
    s.feature_names = {"x"};
    DatasetTable t(s, 0);
    CHECK(class_counts(t).n_pos == 0);
    CHECK(class_counts(t).n_neg == 0);
    for (int y : {1, 0, 0, 1, 1}) t.push_row({0.0}, y);
    CHECK(class_counts(t).n_pos == 3);
    CHECK(class_counts(t).n_neg == 2);
    DatasetTable ones(s, 0);
    for (int i = 0; i < 7; ++i) ones.push_row({0.0}, 1);
    CHECK(class_counts(ones).n_pos == 7);
    CHECK(class_counts(ones).n_neg == 0);
}

TEST_CASE("stratified split proportions") {
    const auto t = random_table(100, 20, 2);
    const auto s = stratified_split(t, 90, 11);
    CHECK(s.train.n_rows == 90);
    CHECK(class_counts(s.train).n_pos == 18);
    CHECK(s.test.n_rows == 10);
    CHECK(class_counts(s.test).n_pos == 2);

    const auto small = stratified_split(random_table(4, 2, 3), 50, 1);
    CHECK(small.train.n_rows == 2);
    CHECK(class_counts(small.train).n_pos == 1);
}

TEST_CASE("stratified split is deterministic and disjoint") {
    const auto t = random_table(57, 13, 4);
    const auto a = stratified_split(t, 70, 99);
    const auto b = stratified_split(t, 70, 99);
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.test_rows == b.test_rows);
    std::set<std::size_t> all(a.train_rows.begin(), a.train_rows.end());
    for (auto r : a.test_rows) CHECK(all.insert(r).second);
    CHECK(all.size() == 57);
    CHECK(stratified_split(t, 70, 100).train_rows != a.train_rows);
}

TEST_CASE("stratified split properties over many tp and seeds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t rows = 10 + seed * 13;
        const auto t = random_table(rows, 3 + seed * 2, seed);
        const auto src = class_counts(t);
        for (int tp = 1; tp <= 99; tp += 7) {
            const auto s = stratified_split(t, tp, seed);
            const auto tr = class_counts(s.train);
            const auto te = class_counts(s.test);
            CHECK(tr.n_pos + te.n_pos == src.n_pos);
            CHECK(tr.n_neg + te.n_neg == src.n_neg);
            // Target train size, rounded half up.
            CHECK(s.train.n_rows == (rows * tp + 50) / 100);
            if (s.train.n_rows > 0) {
                const double diff = std::abs(static_cast<double>(tr.n_pos) / s.train.n_rows -
                                             static_cast<double>(src.n_pos) / rows);
                CHECK(diff <= 1.0 / s.train.n_rows + 1e-12);
            }
        }
    }
}

TEST_CASE("single-class data cannot be split") {
    DatasetSchema s;
    s.feature_names = {"x"};
    DatasetTable t(s, 0);
    for (int i = 0; i < 5; ++i) t.push_row({double(i)}, 0);
    CHECK_THROWS_AS(stratified_split(t, 50, 1), SingleClassDataset);
    CHECK_THROWS_AS(stratified_split(random_table(10, 3, 1), 0, 1), InvalidConfig);
}
