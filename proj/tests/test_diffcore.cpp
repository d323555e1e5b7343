#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "adeqvaet/diffcore.hpp"
#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

using namespace adeqvaet;
using namespace adeqvaet::diff;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor2 t(r, c);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Drives each unary or binary primitive with a random downstream weight so
// that every output element gets a distinct upstream gradient.
using Builder = std::function<NodeId(Graph&, NodeId, NodeId)>;

struct Case {
    const char* name;
    bool binary;
    bool same_shape_b;  // b matches a, otherwise b is a row vector (add broadcast)
    double lo, hi;
    Builder build;
};

double check_primitive(const Case& c, std::size_t rows, std::size_t cols, Rng& rng) {
    ParamStore store;
    store.add("a", random_tensor(rows, cols, rng, c.lo, c.hi));
    if (c.binary) store.add("b", random_tensor(c.same_shape_b ? rows : 1, cols, rng, c.lo, c.hi));
    const auto weight = random_tensor(rows, cols, rng);
    LossBuilder loss = [&](Graph& g, const ParamStore& p) {
        const NodeId a = g.param(p, "a");
        const NodeId b = c.binary ? g.param(p, "b") : a;
        const NodeId y = c.build(g, a, b);
        const auto& shape = g.value(y);
        Tensor2 w(shape.rows, shape.cols);
        for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = weight.data[i % weight.size()];
        return g.sum_all(g.mul(y, g.constant(w)));
    };
    return grad_check(loss, store, 1e-6).max_rel_error;
}

}  // namespace

TEST_CASE("softmax of a closed-form row") {
    Graph g;
    const auto y = g.value(g.softmax_rows(g.constant(Tensor2(1, 2, {std::log(2.0), 0.0}))));
    CHECK(y(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(y(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("layer norm of a constant row is zero") {
    Graph g;
    const auto y = g.value(g.layer_norm_rows(g.constant(Tensor2(1, 5, 3.7)), 1e-5));
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("identity matmul") {
    Rng rng(1);
    const auto a = random_tensor(3, 3, rng);
    Graph g;
    CHECK(g.value(g.matmul(g.constant(Tensor2::identity(3)), g.constant(a))) == a);
}

TEST_CASE("shape errors") {
    Graph g;
    const NodeId a = g.constant(Tensor2(2, 3));
    const NodeId b = g.constant(Tensor2(2, 3));
    CHECK_THROWS_AS(g.matmul(a, b), ShapeMismatch);
    CHECK_THROWS_AS(g.add(a, g.constant(Tensor2(3, 3))), ShapeMismatch);
    CHECK_THROWS_AS(g.mul(a, g.constant(Tensor2(1, 3))), ShapeMismatch);
    CHECK_THROWS_AS(g.backward(a), NonScalarLoss);
}

TEST_CASE("backward of a quadratic") {
    ParamStore p;
    p.add("x", Tensor2(1, 1, 3.0));
    p.add("unused", Tensor2(2, 2, 1.0));
    Graph g;
    const NodeId x = g.param(p, "x");
    g.param(p, "unused");
    const auto grads = g.backward(g.mean_all(g.mul(x, x)));
    CHECK(grads.at("x")(0, 0) == 6.0);
    CHECK(grads.at("unused") == Tensor2(2, 2, 0.0));
}

TEST_CASE("fan-out accumulates") {
    ParamStore p;
    Rng rng(2);
    p.add("x", random_tensor(2, 3, rng));
    Graph g1;
    const NodeId zero1 = g1.constant(Tensor2(2, 3));
    const auto single = g1.backward(g1.mse(g1.param(p, "x"), zero1));
    Graph g2;
    const NodeId x = g2.param(p, "x");
    const NodeId zero2 = g2.constant(Tensor2(2, 3));
    const auto twice = g2.backward(g2.add(g2.mse(x, zero2), g2.mse(x, zero2)));
    for (std::size_t i = 0; i < 6; ++i) CHECK(twice.at("x").data[i] == 2.0 * single.at("x").data[i]);
}

TEST_CASE("graph can be reused after reset") {
    ParamStore p;
    p.add("x", Tensor2(1, 1, 2.0));
    Graph g;
    g.backward(g.mean_all(g.mul(g.param(p, "x"), g.param(p, "x"))));
    g.reset();
    CHECK(g.size() == 0);
    const auto grads = g.backward(g.mean_all(g.scale(g.param(p, "x"), 3.0)));
    CHECK(grads.at("x")(0, 0) == 3.0);
}

TEST_CASE("grad check on a quadratic is near exact") {
    Rng rng(3);
    ParamStore p;
    p.add("w", random_tensor(3, 2, rng));
    const auto target = random_tensor(4, 2, rng);
    const auto input = random_tensor(4, 3, rng);
    LossBuilder build = [&](Graph& g, const ParamStore& s) {
        return g.mse(g.matmul(g.constant(input), g.param(s, "w")), g.constant(target));
    };
    CHECK(grad_check(build, p).max_rel_error < 1e-7);
}

TEST_CASE("sigmoid and cross-entropy at logit zero") {
    // d/dw BCE(sigmoid(w x), y) = (p - y) x with p = 0.5 at w = 0.
    ParamStore p;
    p.add("w", Tensor2(1, 1, 0.0));
    for (double y : {0.0, 1.0}) {
        Graph g;
        const NodeId logit = g.matmul(g.constant(Tensor2(1, 1, 1.7)), g.param(p, "w"));
        const auto grads = g.backward(g.binary_cross_entropy(g.sigmoid(logit), g.constant(Tensor2(1, 1, y))));
        CHECK(std::abs(grads.at("w")(0, 0) - (0.5 - y) * 1.7) < 1e-7);
    }
}

TEST_CASE("every primitive matches finite differences on random shapes") {
    const std::vector<Case> cases = {
        {"matmul", true, false, -1, 1, nullptr},
        {"add", true, true, -1, 1, [](Graph& g, NodeId a, NodeId b) { return g.add(a, b); }},
        {"add_row", true, false, -1, 1, [](Graph& g, NodeId a, NodeId b) { return g.add(a, b); }},
        {"mul", true, true, -1, 1, [](Graph& g, NodeId a, NodeId b) { return g.mul(a, b); }},
        {"relu", false, true, 0.05, 1, [](Graph& g, NodeId a, NodeId) { return g.relu(g.scale(a, -1.0)); }},
        {"relu_pos", false, true, 0.05, 1, [](Graph& g, NodeId a, NodeId) { return g.relu(a); }},
        {"sigmoid", false, true, -3, 3, [](Graph& g, NodeId a, NodeId) { return g.sigmoid(a); }},
        {"tanh", false, true, -2, 2, [](Graph& g, NodeId a, NodeId) { return g.tanh(a); }},
        {"exp", false, true, -1, 1, [](Graph& g, NodeId a, NodeId) { return g.exp(a); }},
        {"softmax", false, true, -2, 2, [](Graph& g, NodeId a, NodeId) { return g.softmax_rows(a); }},
        {"layer_norm", false, true, -2, 2, [](Graph& g, NodeId a, NodeId) { return g.layer_norm_rows(a, 1e-5); }},
        {"mean_all", false, true, -2, 2, [](Graph& g, NodeId a, NodeId) { return g.mean_all(a); }},
        {"bce", false, true, 0.05, 0.95, [](Graph& g, NodeId a, NodeId) {
             const auto& p = g.value(a);
             Tensor2 labels(p.rows, p.cols);
             for (std::size_t i = 0; i < labels.size(); ++i) labels.data[i] = static_cast<double>(i % 2);
             return g.binary_cross_entropy(a, g.constant(labels));
         }},
        {"mse", true, true, -1, 1, [](Graph& g, NodeId a, NodeId b) { return g.mse(a, b); }},
        {"tile", false, true, -1, 1, [](Graph& g, NodeId a, NodeId) { return g.tile_rows(a, 3); }},
    };
    Rng rng(42);
    int checked = 0;
    for (const auto& c : cases) {
        for (int trial = 0; trial < 8; ++trial) {
            const std::size_t rows = 1 + rng.index(4), cols = 2 + rng.index(4);
            double err = 0.0;
            if (std::string(c.name) == "matmul") {
                Case mm = c;
                const std::size_t inner = cols, out = 1 + rng.index(4);
                ParamStore store;
                store.add("a", random_tensor(rows, inner, rng));
                store.add("b", random_tensor(inner, out, rng));
                const auto w = random_tensor(rows, out, rng);
                LossBuilder loss = [&](Graph& g, const ParamStore& p) {
                    return g.sum_all(g.mul(g.matmul(g.param(p, "a"), g.param(p, "b")), g.constant(w)));
                };
                err = grad_check(loss, store, 1e-6).max_rel_error;
            } else {
                err = check_primitive(c, rows, cols, rng);
            }
            INFO(std::string(c.name), " rows=", rows, " cols=", cols);
            CHECK(err < 1e-5);
            ++checked;
        }
    }
    CHECK(checked >= 100);
}

TEST_CASE("block attention primitives match finite differences") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t block = 2 + rng.index(3), blocks = 1 + rng.index(3), d = 2 + rng.index(3);
        ParamStore store;
        store.add("q", random_tensor(blocks * block, d, rng));
        store.add("k", random_tensor(blocks * block, d, rng));
        store.add("v", random_tensor(blocks * block, d, rng));
        const auto w = random_tensor(blocks, d, rng);
        LossBuilder loss = [&](Graph& g, const ParamStore& p) {
            const NodeId s = g.softmax_rows(g.block_matmul_abt(g.param(p, "q"), g.param(p, "k"), block));
            const NodeId o = g.block_mean_rows(g.block_matmul(s, g.param(p, "v"), block), block);
            return g.sum_all(g.mul(o, g.constant(w)));
        };
        CHECK(grad_check(loss, store, 1e-6).max_rel_error < 1e-5);
    }
}

TEST_CASE("softmax rows sum to one and stay in (0,1)") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Graph g;
        const auto y = g.value(g.softmax_rows(g.constant(random_tensor(1 + rng.index(5), 2 + rng.index(6), rng, -20, 20))));
        for (std::size_t r = 0; r < y.rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < y.cols; ++c) {
                CHECK(y(r, c) > 0.0);
                CHECK(y(r, c) < 1.0);
                s += y(r, c);
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("gradient accumulation does not depend on construction order") {
    Rng rng(9);
    ParamStore p;
    p.add("x", random_tensor(3, 3, rng));
    const auto c1 = random_tensor(3, 3, rng), c2 = random_tensor(3, 3, rng);
    auto run = [&](bool swapped) {
        Graph g;
        const NodeId x = g.param(p, "x");
        const NodeId t1 = g.sum_all(g.mul(g.tanh(x), g.constant(c1)));
        const NodeId t2 = g.sum_all(g.mul(g.sigmoid(x), g.constant(c2)));
        const NodeId t3 = g.mean_all(g.mul(x, x));
        const NodeId loss = swapped ? g.add(t3, g.add(t2, t1)) : g.add(g.add(t1, t2), t3);
        return g.backward(loss).at("x");
    };
    const auto a = run(false), b = run(true);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-12);
}

TEST_CASE("adam") {
    ParamStore p;
    p.add("w", Tensor2(1, 3, {1.0, -2.0, 0.5}));
    const auto before = p.get("w");
    adam_step(p, {{"w", Tensor2(1, 3)}}, {.lr = 0.1});
    CHECK(p.get("w") == before);

    ParamStore q;
    q.add("w", Tensor2(1, 3, 0.0));
    adam_step(q, {{"w", Tensor2(1, 3, {2.0, -0.5, 1e-3})}}, {.lr = 0.01});
    CHECK(q.get("w")(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(q.get("w")(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(q.get("w")(0, 2) == doctest::Approx(-0.01).epsilon(1e-4));

    ParamStore d;
    d.add("w", Tensor2(1, 1, 2.0));
    for (int i = 0; i < 3; ++i) adam_step(d, {}, {.lr = 0.01, .weight_decay = 0.1});
    CHECK(d.get("w")(0, 0) == doctest::Approx(2.0 * std::pow(0.999, 3)).epsilon(1e-14));

    CHECK_THROWS_AS(adam_step(d, {{"w", Tensor2(2, 1)}}, {}), ShapeMismatch);
}

TEST_CASE("parameter store file layout and round trip") {
    ParamStore p;
    p.add("b", Tensor2(1, 2, {1.5, -2.0}));
    p.add("a", Tensor2(2, 1, {0.25, 3.0}));
    const auto bytes = p.serialize();
    REQUIRE(bytes.size() == 4 + 2 * (4 + 1 + 16 + 16));
    CHECK(bytes.substr(0, 4) == "QVT1");
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 4, 4);
    CHECK(len == 1);
    CHECK(bytes[8] == 'a');  // name order
    double first = 0.0;
    std::memcpy(&first, bytes.data() + 4 + 4 + 1 + 16, 8);
    CHECK(first == 0.25);

    const auto back = ParamStore::deserialize(bytes);
    CHECK(back.same_values(p));
    const auto path = std::filesystem::temp_directory_path() / "adeqvaet_params.bin";
    p.save(path);
    CHECK(ParamStore::load(path).same_values(p));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(ParamStore::deserialize("XXXX"), FormatError);
    CHECK_THROWS_AS(ParamStore::deserialize(bytes.substr(0, bytes.size() - 3)), FormatError);
}
