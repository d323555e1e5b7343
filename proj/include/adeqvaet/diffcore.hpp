#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace adeqvaet::diff {

/// Dense row-major matrix of doubles.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Tensor2(std::size_t r, std::size_t c, std::vector<double> values);

    static Tensor2 identity(std::size_t n);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Tensor2&, const Tensor2&) = default;
};

std::string shape_str(const Tensor2& t);

using Gradients = std::map<std::string, Tensor2>;

/// Named trainable tensors plus Adam moment state.
class ParamStore {
public:
    struct Entry {
        Tensor2 value;
        Tensor2 m;  // first moment
        Tensor2 v;  // second moment
    };

    /// Adds a parameter; throws if the name exists.
    void add(const std::string& name, Tensor2 value);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Tensor2& get(const std::string& name) const;
    Tensor2& mut(const std::string& name);
    /// Replace a value; the shape must not change.
    void set(const std::string& name, Tensor2 value);

    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::map<std::string, Entry>& entries() { return entries_; }
    std::size_t parameter_count() const;
    std::uint64_t step() const { return step_; }
    void set_step(std::uint64_t s) { step_ = s; }

    /// "QVT1" followed by (u32 name length, name, u64 rows, u64 cols,
    /// rows*cols little-endian doubles) per tensor, in name order.
    std::string serialize() const;
    static ParamStore deserialize(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static ParamStore load(const std::filesystem::path& path);

    /// Values only; optimizer state is not compared.
    bool same_values(const ParamStore& other) const;

private:
    std::map<std::string, Entry> entries_;
    std::uint64_t step_ = 0;
};

using NodeId = std::size_t;

enum class Op {
    constant,
    variable,
    param,
    matmul,
    add,
    mul,
    relu,
    sigmoid,
    tanh,
    exp,
    scale,
    softmax_rows,
    layer_norm_rows,
    mean_all,
    sum_all,
    bce,
    mse,
    tile_rows,
    block_matmul_abt,
    block_matmul,
    block_mean_rows,
};

// Append-only reverse-mode tape. Node inputs always precede the node, so a
// single reverse sweep is a valid topological order.
class Graph {
public:
    NodeId constant(Tensor2 value);
    /// Leaf that is not a parameter but whose gradient is kept.
    NodeId variable(Tensor2 value);
    NodeId param(const ParamStore& store, const std::string& name);

    NodeId matmul(NodeId a, NodeId b);
    /// Elementwise sum; `b` may also be a 1 x cols row added to every row of `a`.
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId tanh(NodeId a);
    NodeId exp(NodeId a);
    NodeId scale(NodeId a, double factor);
    NodeId softmax_rows(NodeId a);
    /// Per-row normalisation to zero mean and unit variance (no affine part).
    NodeId layer_norm_rows(NodeId a, double eps);
    NodeId mean_all(NodeId a);
    NodeId sum_all(NodeId a);
    /// Mean binary cross-entropy of probabilities `pred` against `label`.
    NodeId binary_cross_entropy(NodeId pred, NodeId label);
    NodeId mse(NodeId pred, NodeId target);

    /// Stacks `times` copies of `a` vertically.
    NodeId tile_rows(NodeId a, std::size_t times);
    /// Row blocks of height `block`: out_b = a_b * b_b^T, shape (rows x block).
    NodeId block_matmul_abt(NodeId a, NodeId b, std::size_t block);
    /// Row blocks of height `block`: out_b = p_b * v_b with p_b square.
    NodeId block_matmul(NodeId p, NodeId v, std::size_t block);
    /// Mean of each row block; output has one row per block.
    NodeId block_mean_rows(NodeId a, std::size_t block);

    const Tensor2& value(NodeId id) const { return nodes_.at(id).value; }
    /// Gradient of the last backward() loss; empty tensor when not tracked.
    const Tensor2& grad(NodeId id) const { return nodes_.at(id).grad; }
    Op op(NodeId id) const { return nodes_.at(id).op; }
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a 1x1 loss. Returns dLoss/dParam keyed by
    /// parameter name, accumulating when a parameter is bound twice.
    Gradients backward(NodeId loss);

    void reset() { nodes_.clear(); }

private:
    static constexpr NodeId none = static_cast<NodeId>(-1);

    struct Node {
        Op op;
        NodeId a = none;
        NodeId b = none;
        Tensor2 value{};
        Tensor2 grad{};
        Tensor2 aux{};  // per-op cache (layer norm inverse std)
        double scalar = 0.0;
        std::size_t block = 0;
        std::string name{};
        bool tracked = false;
    };

    NodeId push(Node node);
    const Node& at(NodeId id) const;
    bool tracked(NodeId a, NodeId b = none) const;

    std::vector<Node> nodes_;
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled: p <- p * (1 - lr * wd) first
};

/// One bias-corrected Adam update. Parameters without a gradient entry are
/// treated as having a zero gradient.
void adam_step(ParamStore& store, const Gradients& grads, const AdamOptions& opt);

using LossBuilder = std::function<NodeId(Graph&, const ParamStore&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
};

/// Central finite differences against backward(); relative error is
/// |a - b| / max(1e-8, |a|, |b|).
GradCheckResult grad_check(const LossBuilder& build, ParamStore& params, double eps = 1e-5);

}  // namespace adeqvaet::diff
