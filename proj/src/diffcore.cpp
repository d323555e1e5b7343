#include "adeqvaet/diffcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adeqvaet/error.hpp"

namespace adeqvaet::diff {

Tensor2::Tensor2(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw ShapeMismatch("tensor data length does not match shape");
}

Tensor2 Tensor2::identity(std::size_t n) {
    Tensor2 t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

std::string shape_str(const Tensor2& t) {
    return "(" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + ")";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor2& got, const std::string& expected) {
    throw ShapeMismatch(std::string(op) + ": got " + shape_str(got) + ", expected " + expected);
}

// c += a * b
void gemm_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = &c.data[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.data[i * a.cols + k];
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

// c += a * b^T
void gemm_abt_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a.data[i * a.cols + k] * b.data[j * b.cols + k];
            c.data[i * c.cols + j] += s;
        }
}

// c += a^T * b
void gemm_atb_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    for (std::size_t k = 0; k < a.rows; ++k)
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = a.data[k * a.cols + i];
            if (aki == 0.0) continue;
            double* crow = &c.data[i * c.cols];
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
}

constexpr double kProbFloor = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

void ParamStore::add(const std::string& name, Tensor2 value) {
    if (entries_.count(name)) throw InvalidConfig("duplicate parameter '" + name + "'");
    Entry e;
    e.m = Tensor2(value.rows, value.cols);
    e.v = Tensor2(value.rows, value.cols);
    e.value = std::move(value);
    entries_.emplace(name, std::move(e));
}

const Tensor2& ParamStore::get(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidConfig("unknown parameter '" + name + "'");
    return it->second.value;
}

Tensor2& ParamStore::mut(const std::string& name) {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidConfig("unknown parameter '" + name + "'");
    return it->second.value;
}

void ParamStore::set(const std::string& name, Tensor2 value) {
    Tensor2& dst = mut(name);
    if (!dst.same_shape(value)) shape_error("ParamStore::set", value, shape_str(dst));
    dst = std::move(value);
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto it = other.entries_.begin();
    for (const auto& [name, e] : entries_) {
        if (name != it->first || !(e.value == it->second.value)) return false;
        ++it;
    }
    return true;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw FormatError("truncated parameter file");
    }
    std::uint64_t uint(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += static_cast<std::size_t>(width);
        return v;
    }
};

}  // namespace

std::string ParamStore::serialize() const {
    std::string out = "QVT1";
    for (const auto& [name, e] : entries_) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u64(out, e.value.rows);
        put_u64(out, e.value.cols);
        for (double d : e.value.data) put_u64(out, std::bit_cast<std::uint64_t>(d));
    }
    return out;
}

ParamStore ParamStore::deserialize(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "QVT1") != 0) throw FormatError("bad parameter file magic");
    Reader rd{bytes, 4};
    ParamStore store;
    while (rd.pos < bytes.size()) {
        const auto len = static_cast<std::size_t>(rd.uint(4));
        rd.need(len);
        std::string name = bytes.substr(rd.pos, len);
        rd.pos += len;
        const auto rows = static_cast<std::size_t>(rd.uint(8));
        const auto cols = static_cast<std::size_t>(rd.uint(8));
        if (rows != 0 && cols > (bytes.size() - rd.pos) / 8 / rows)
            throw FormatError("tensor '" + name + "' exceeds file size");
        Tensor2 t(rows, cols);
        for (auto& d : t.data) d = std::bit_cast<double>(rd.uint(8));
        store.add(name, std::move(t));
    }
    return store;
}

void ParamStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    const auto bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

// ---------------------------------------------------------------------------
// Graph: forward

NodeId Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

const Graph::Node& Graph::at(NodeId id) const {
    if (id >= nodes_.size()) throw InvalidConfig("node id out of range");
    return nodes_[id];
}

bool Graph::tracked(NodeId a, NodeId b) const {
    return at(a).tracked || (b != none && at(b).tracked);
}

NodeId Graph::constant(Tensor2 value) {
    Node n{.op = Op::constant};
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Graph::variable(Tensor2 value) {
    Node n{.op = Op::variable};
    n.value = std::move(value);
    n.tracked = true;
    return push(std::move(n));
}

NodeId Graph::param(const ParamStore& store, const std::string& name) {
    Node n{.op = Op::param};
    n.value = store.get(name);
    n.name = name;
    n.tracked = true;
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const auto& A = at(a).value;
    const auto& B = at(b).value;
    if (A.cols != B.rows) shape_error("matmul", B, "(" + std::to_string(A.cols) + "xN)");
    Node n{.op = Op::matmul, .a = a, .b = b};
    n.value = Tensor2(A.rows, B.cols);
    gemm_acc(A, B, n.value);
    n.tracked = tracked(a, b);
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    const auto& A = at(a).value;
    const auto& B = at(b).value;
    Node n{.op = Op::add, .a = a, .b = b};
    n.value = A;
    if (A.same_shape(B)) {
        for (std::size_t i = 0; i < A.size(); ++i) n.value.data[i] += B.data[i];
    } else if (B.rows == 1 && B.cols == A.cols) {
        for (std::size_t r = 0; r < A.rows; ++r)
            for (std::size_t c = 0; c < A.cols; ++c) n.value(r, c) += B.data[c];
    } else {
        shape_error("add", B, shape_str(A) + " or (1x" + std::to_string(A.cols) + ")");
    }
    n.tracked = tracked(a, b);
    return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
    const auto& A = at(a).value;
    const auto& B = at(b).value;
    if (!A.same_shape(B)) shape_error("mul", B, shape_str(A));
    Node n{.op = Op::mul, .a = a, .b = b};
    n.value = A;
    for (std::size_t i = 0; i < A.size(); ++i) n.value.data[i] *= B.data[i];
    n.tracked = tracked(a, b);
    return push(std::move(n));
}

#define ADEQVAET_UNARY(fn, opname, expr)            \
    NodeId Graph::fn(NodeId a) {                    \
        Node n{.op = Op::opname, .a = a};                      \
        n.value = at(a).value;                      \
        for (double& x : n.value.data) x = (expr);  \
        n.tracked = tracked(a);                     \
        return push(std::move(n));                  \
    }

ADEQVAET_UNARY(relu, relu, x > 0.0 ? x : 0.0)
ADEQVAET_UNARY(sigmoid, sigmoid, x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)))
ADEQVAET_UNARY(tanh, tanh, std::tanh(x))
ADEQVAET_UNARY(exp, exp, std::exp(x))

#undef ADEQVAET_UNARY

NodeId Graph::scale(NodeId a, double factor) {
    Node n{.op = Op::scale, .a = a};
    n.value = at(a).value;
    for (double& x : n.value.data) x *= factor;
    n.scalar = factor;
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::softmax_rows(NodeId a) {
    Node n{.op = Op::softmax_rows, .a = a};
    n.value = at(a).value;
    auto& Y = n.value;
    for (std::size_t r = 0; r < Y.rows; ++r) {
        double* row = &Y.data[r * Y.cols];
        const double mx = *std::max_element(row, row + Y.cols);
        double sum = 0.0;
        for (std::size_t c = 0; c < Y.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < Y.cols; ++c) row[c] /= sum;
    }
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::layer_norm_rows(NodeId a, double eps) {
    const auto& X = at(a).value;
    Node n{.op = Op::layer_norm_rows, .a = a};
    n.value = Tensor2(X.rows, X.cols);
    n.aux = Tensor2(X.rows, 1);
    const auto width = static_cast<double>(X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const double* x = &X.data[r * X.cols];
        double mean = 0.0;
        for (std::size_t c = 0; c < X.cols; ++c) mean += x[c];
        mean /= width;
        double var = 0.0;
        for (std::size_t c = 0; c < X.cols; ++c) var += (x[c] - mean) * (x[c] - mean);
        var /= width;
        const double inv = 1.0 / std::sqrt(var + eps);
        n.aux.data[r] = inv;
        for (std::size_t c = 0; c < X.cols; ++c) n.value(r, c) = (x[c] - mean) * inv;
    }
    n.scalar = eps;
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::mean_all(NodeId a) {
    const auto& A = at(a).value;
    if (A.size() == 0) shape_error("mean_all", A, "non-empty tensor");
    Node n{.op = Op::mean_all, .a = a};
    double s = 0.0;
    for (double x : A.data) s += x;
    n.value = Tensor2(1, 1, s / static_cast<double>(A.size()));
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::sum_all(NodeId a) {
    const auto& A = at(a).value;
    Node n{.op = Op::sum_all, .a = a};
    double s = 0.0;
    for (double x : A.data) s += x;
    n.value = Tensor2(1, 1, s);
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::binary_cross_entropy(NodeId pred, NodeId label) {
    const auto& P = at(pred).value;
    const auto& Y = at(label).value;
    if (!P.same_shape(Y)) shape_error("binary_cross_entropy", Y, shape_str(P));
    if (P.size() == 0) shape_error("binary_cross_entropy", P, "non-empty tensor");
    Node n{.op = Op::bce, .a = pred, .b = label};
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double p = std::clamp(P.data[i], kProbFloor, 1.0 - kProbFloor);
        s -= Y.data[i] * std::log(p) + (1.0 - Y.data[i]) * std::log(1.0 - p);
    }
    n.value = Tensor2(1, 1, s / static_cast<double>(P.size()));
    n.tracked = tracked(pred, label);
    return push(std::move(n));
}

NodeId Graph::mse(NodeId pred, NodeId target) {
    const auto& P = at(pred).value;
    const auto& T = at(target).value;
    if (!P.same_shape(T)) shape_error("mse", T, shape_str(P));
    if (P.size() == 0) shape_error("mse", P, "non-empty tensor");
    Node n{.op = Op::mse, .a = pred, .b = target};
    double s = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) s += (P.data[i] - T.data[i]) * (P.data[i] - T.data[i]);
    n.value = Tensor2(1, 1, s / static_cast<double>(P.size()));
    n.tracked = tracked(pred, target);
    return push(std::move(n));
}

NodeId Graph::tile_rows(NodeId a, std::size_t times) {
    const auto& A = at(a).value;
    Node n{.op = Op::tile_rows, .a = a};
    n.value = Tensor2(A.rows * times, A.cols);
    for (std::size_t t = 0; t < times; ++t)
        std::copy(A.data.begin(), A.data.end(), n.value.data.begin() + static_cast<std::ptrdiff_t>(t * A.size()));
    n.block = times;
    n.tracked = tracked(a);
    return push(std::move(n));
}

NodeId Graph::block_matmul_abt(NodeId a, NodeId b, std::size_t block) {
    const auto& A = at(a).value;
    const auto& B = at(b).value;
    if (block == 0 || A.rows % block != 0) shape_error("block_matmul_abt", A, "rows divisible by block");
    if (!A.same_shape(B)) shape_error("block_matmul_abt", B, shape_str(A));
    Node n{.op = Op::block_matmul_abt, .a = a, .b = b};
    n.value = Tensor2(A.rows, block);
    for (std::size_t off = 0; off < A.rows; off += block)
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t j = 0; j < block; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < A.cols; ++k) s += A(off + i, k) * B(off + j, k);
                n.value(off + i, j) = s;
            }
    n.block = block;
    n.tracked = tracked(a, b);
    return push(std::move(n));
}

NodeId Graph::block_matmul(NodeId p, NodeId v, std::size_t block) {
    const auto& P = at(p).value;
    const auto& V = at(v).value;
    if (block == 0 || P.cols != block || P.rows % block != 0)
        shape_error("block_matmul", P, "(k*" + std::to_string(block) + "x" + std::to_string(block) + ")");
    if (V.rows != P.rows) shape_error("block_matmul", V, "(" + std::to_string(P.rows) + "xN)");
    Node n{.op = Op::block_matmul, .a = p, .b = v};
    n.value = Tensor2(V.rows, V.cols);
    for (std::size_t off = 0; off < P.rows; off += block)
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t k = 0; k < block; ++k) {
                const double pik = P(off + i, k);
                for (std::size_t j = 0; j < V.cols; ++j) n.value(off + i, j) += pik * V(off + k, j);
            }
    n.block = block;
    n.tracked = tracked(p, v);
    return push(std::move(n));
}

NodeId Graph::block_mean_rows(NodeId a, std::size_t block) {
    const auto& A = at(a).value;
    if (block == 0 || A.rows % block != 0) shape_error("block_mean_rows", A, "rows divisible by block");
    Node n{.op = Op::block_mean_rows, .a = a};
    n.value = Tensor2(A.rows / block, A.cols);
    const double inv = 1.0 / static_cast<double>(block);
    for (std::size_t r = 0; r < A.rows; ++r)
        for (std::size_t c = 0; c < A.cols; ++c) n.value(r / block, c) += A(r, c) * inv;
    n.block = block;
    n.tracked = tracked(a);
    return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Graph: backward

Gradients Graph::backward(NodeId loss) {
    const auto& L = at(loss).value;
    if (L.rows != 1 || L.cols != 1) throw NonScalarLoss("loss node has shape " + shape_str(L));
    for (std::size_t i = 0; i <= loss; ++i) {
        auto& node = nodes_[i];
        node.grad = node.tracked ? Tensor2(node.value.rows, node.value.cols) : Tensor2();
    }
    Gradients out;
    if (!nodes_[loss].tracked) return out;
    nodes_[loss].grad.data[0] = 1.0;

    for (std::size_t idx = loss + 1; idx-- > 0;) {
        Node& n = nodes_[idx];
        if (!n.tracked) continue;
        const Tensor2& G = n.grad;
        const Tensor2& Y = n.value;
        Node* A = n.a != none ? &nodes_[n.a] : nullptr;
        Node* B = n.b != none ? &nodes_[n.b] : nullptr;
        const bool ga = A && A->tracked;
        const bool gb = B && B->tracked;

        switch (n.op) {
            case Op::constant:
            case Op::variable:
                break;
            case Op::param: {
                auto [it, inserted] = out.try_emplace(n.name, G);
                if (!inserted)
                    for (std::size_t i = 0; i < G.size(); ++i) it->second.data[i] += G.data[i];
                break;
            }
            case Op::matmul:
                if (ga) gemm_abt_acc(G, B->value, A->grad);
                if (gb) gemm_atb_acc(A->value, G, B->grad);
                break;
            case Op::add:
                if (ga)
                    for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i] += G.data[i];
                if (gb) {
                    if (B->value.same_shape(G)) {
                        for (std::size_t i = 0; i < G.size(); ++i) B->grad.data[i] += G.data[i];
                    } else {
                        for (std::size_t r = 0; r < G.rows; ++r)
                            for (std::size_t c = 0; c < G.cols; ++c) B->grad.data[c] += G(r, c);
                    }
                }
                break;
            case Op::mul:
                for (std::size_t i = 0; i < G.size(); ++i) {
                    if (ga) A->grad.data[i] += G.data[i] * B->value.data[i];
                    if (gb) B->grad.data[i] += G.data[i] * A->value.data[i];
                }
                break;
            case Op::relu:
                for (std::size_t i = 0; i < G.size(); ++i)
                    if (A->value.data[i] > 0.0) A->grad.data[i] += G.data[i];
                break;
            case Op::sigmoid:
                for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i] += G.data[i] * Y.data[i] * (1.0 - Y.data[i]);
                break;
            case Op::tanh:
                for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i] += G.data[i] * (1.0 - Y.data[i] * Y.data[i]);
                break;
            case Op::exp:
                for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i] += G.data[i] * Y.data[i];
                break;
            case Op::scale:
                for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i] += G.data[i] * n.scalar;
                break;
            case Op::softmax_rows:
                for (std::size_t r = 0; r < Y.rows; ++r) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < Y.cols; ++c) dot += G(r, c) * Y(r, c);
                    for (std::size_t c = 0; c < Y.cols; ++c) A->grad(r, c) += Y(r, c) * (G(r, c) - dot);
                }
                break;
            case Op::layer_norm_rows: {
                const auto width = static_cast<double>(Y.cols);
                for (std::size_t r = 0; r < Y.rows; ++r) {
                    double mg = 0.0;
                    double mgy = 0.0;
                    for (std::size_t c = 0; c < Y.cols; ++c) {
                        mg += G(r, c);
                        mgy += G(r, c) * Y(r, c);
                    }
                    mg /= width;
                    mgy /= width;
                    const double inv = n.aux.data[r];
                    for (std::size_t c = 0; c < Y.cols; ++c)
                        A->grad(r, c) += inv * (G(r, c) - mg - Y(r, c) * mgy);
                }
                break;
            }
            case Op::mean_all: {
                const double g = G.data[0] / static_cast<double>(A->value.size());
                for (double& x : A->grad.data) x += g;
                break;
            }
            case Op::sum_all:
                for (double& x : A->grad.data) x += G.data[0];
                break;
            case Op::bce: {
                const auto count = static_cast<double>(A->value.size());
                for (std::size_t i = 0; i < A->value.size(); ++i) {
                    const double p = std::clamp(A->value.data[i], kProbFloor, 1.0 - kProbFloor);
                    const double y = B->value.data[i];
                    if (ga) A->grad.data[i] += G.data[0] * (p - y) / (p * (1.0 - p)) / count;
                    if (gb) B->grad.data[i] += G.data[0] * -(std::log(p) - std::log(1.0 - p)) / count;
                }
                break;
            }
            case Op::mse: {
                const auto count = static_cast<double>(A->value.size());
                for (std::size_t i = 0; i < A->value.size(); ++i) {
                    const double d = 2.0 * (A->value.data[i] - B->value.data[i]) / count * G.data[0];
                    if (ga) A->grad.data[i] += d;
                    if (gb) B->grad.data[i] -= d;
                }
                break;
            }
            case Op::tile_rows: {
                const std::size_t chunk = A->value.size();
                for (std::size_t i = 0; i < G.size(); ++i) A->grad.data[i % chunk] += G.data[i];
                break;
            }
            case Op::block_matmul_abt: {
                const std::size_t blk = n.block;
                const auto& Av = A->value;
                const auto& Bv = B->value;
                for (std::size_t off = 0; off < Av.rows; off += blk)
                    for (std::size_t i = 0; i < blk; ++i)
                        for (std::size_t j = 0; j < blk; ++j) {
                            const double g = G(off + i, j);
                            if (g == 0.0) continue;
                            for (std::size_t k = 0; k < Av.cols; ++k) {
                                if (ga) A->grad(off + i, k) += g * Bv(off + j, k);
                                if (gb) B->grad(off + j, k) += g * Av(off + i, k);
                            }
                        }
                break;
            }
            case Op::block_matmul: {
                const std::size_t blk = n.block;
                const auto& P = A->value;
                const auto& V = B->value;
                for (std::size_t off = 0; off < P.rows; off += blk)
                    for (std::size_t i = 0; i < blk; ++i)
                        for (std::size_t k = 0; k < blk; ++k) {
                            double dp = 0.0;
                            const double pik = P(off + i, k);
                            for (std::size_t j = 0; j < V.cols; ++j) {
                                dp += G(off + i, j) * V(off + k, j);
                                if (gb) B->grad(off + k, j) += pik * G(off + i, j);
                            }
                            if (ga) A->grad(off + i, k) += dp;
                        }
                break;
            }
            case Op::block_mean_rows: {
                const double inv = 1.0 / static_cast<double>(n.block);
                for (std::size_t r = 0; r < A->value.rows; ++r)
                    for (std::size_t c = 0; c < A->value.cols; ++c) A->grad(r, c) += G(r / n.block, c) * inv;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void adam_step(ParamStore& store, const Gradients& grads, const AdamOptions& opt) {
    for (const auto& [name, g] : grads) {
        if (!store.contains(name)) throw InvalidConfig("gradient for unknown parameter '" + name + "'");
        if (!store.get(name).same_shape(g)) shape_error("adam_step", g, shape_str(store.get(name)));
    }
    store.set_step(store.step() + 1);
    const auto t = static_cast<double>(store.step());
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    const double decay = 1.0 - opt.lr * opt.weight_decay;
    for (auto& [name, e] : store.entries()) {
        const auto it = grads.find(name);
        const Tensor2* g = it == grads.end() ? nullptr : &it->second;
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double gi = g ? g->data[i] : 0.0;
            e.value.data[i] *= decay;
            e.m.data[i] = opt.beta1 * e.m.data[i] + (1.0 - opt.beta1) * gi;
            e.v.data[i] = opt.beta2 * e.v.data[i] + (1.0 - opt.beta2) * gi * gi;
            const double mhat = e.m.data[i] / bc1;
            const double vhat = e.v.data[i] / bc2;
            e.value.data[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

GradCheckResult grad_check(const LossBuilder& build, ParamStore& params, double eps) {
    if (!(eps > 0.0)) throw InvalidConfig("grad_check eps must be positive");
    Graph graph;
    const NodeId loss = build(graph, params);
    const Gradients analytic = graph.backward(loss);

    auto evaluate = [&] {
        Graph g;
        return g.value(build(g, params)).data[0];
    };

    GradCheckResult result;
    for (auto& [name, entry] : params.entries()) {
        const auto it = analytic.find(name);
        for (std::size_t i = 0; i < entry.value.size(); ++i) {
            double& p = entry.value.data[i];
            const double saved = p;
            p = saved + eps;
            const double up = evaluate();
            p = saved - eps;
            const double down = evaluate();
            p = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double exact = it == analytic.end() ? 0.0 : it->second.data[i];
            const double denom = std::max({1e-8, std::abs(numeric), std::abs(exact)});
            const double rel = std::abs(numeric - exact) / denom;
            ++result.coordinates;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

}  // namespace adeqvaet::diff
