#include "adeqvaet/transformer.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet::transformer {

using diff::Graph;
using diff::NodeId;
using diff::Tensor2;

namespace {

std::string layer_key(std::size_t layer, const std::string& name) {
    return "L" + std::to_string(layer) + "." + name;
}

std::string head_key(std::size_t layer, const char* name, std::size_t head) {
    return layer_key(layer, name + std::to_string(head));
}

Tensor2 xavier(std::size_t in, std::size_t out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor2 t(in, out);
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

std::size_t seq_of(const ClassifierModel& m) {
    if (m.seq_len == 0) throw DimensionMismatch("classifier has no sequence length");
    return m.seq_len;
}

}  // namespace

void TransformerConfig::validate() const {
    if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
        throw InvalidConfig("d_model must be a positive multiple of n_heads");
    if (n_layers == 0) throw InvalidConfig("transformer n_layers must be >= 1");
    if (ff_hidden == 0) throw InvalidConfig("ff_hidden must be >= 1");
    if (!(layer_norm_eps > 0.0)) throw InvalidConfig("layer_norm_eps must be > 0");
}

DefectPrediction decide(double probability) { return {probability, probability >= 0.5 ? 1 : 0}; }

ClassifierModel init_classifier(const TransformerConfig& cfg, std::size_t seq_len, std::uint64_t seed) {
    cfg.validate();
    if (seq_len == 0) throw DimensionMismatch("latent dimension must be >= 1");
    Rng rng(seed);
    ClassifierModel m;
    m.cfg = cfg;
    m.seq_len = seq_len;
    const std::size_t d = cfg.d_model;
    const std::size_t dh = cfg.head_dim();
    auto& p = m.params;
    p.add("embed_w", xavier(1, d, rng));
    p.add("embed_b", Tensor2(1, d));
    Tensor2 pos(seq_len, d);
    for (double& v : pos.data) v = rng.uniform(-0.1, 0.1);
    p.add("pos", std::move(pos));
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            p.add(head_key(l, "wq", h), xavier(d, dh, rng));
            p.add(head_key(l, "wk", h), xavier(d, dh, rng));
            p.add(head_key(l, "wv", h), xavier(d, dh, rng));
            p.add(head_key(l, "wo", h), xavier(dh, d, rng));
        }
        p.add(layer_key(l, "bo"), Tensor2(1, d));
        p.add(layer_key(l, "ff_w1"), xavier(d, cfg.ff_hidden, rng));
        p.add(layer_key(l, "ff_b1"), Tensor2(1, cfg.ff_hidden));
        p.add(layer_key(l, "ff_w2"), xavier(cfg.ff_hidden, d, rng));
        p.add(layer_key(l, "ff_b2"), Tensor2(1, d));
    }
    p.add("out_w", xavier(d, 1, rng));
    p.add("out_b", Tensor2(1, 1));
    return m;
}

NodeId embed_tokens(Graph& g, const ClassifierModel& model, const Tensor2& latents) {
    const std::size_t seq = seq_of(model);
    if (latents.cols != seq)
        throw DimensionMismatch("latents have " + std::to_string(latents.cols) + " columns, expected " +
                                std::to_string(seq));
    const NodeId column = g.constant(Tensor2(latents.size(), 1, latents.data));
    const NodeId scaled = g.matmul(column, g.param(model.params, "embed_w"));
    const NodeId biased = g.add(scaled, g.param(model.params, "embed_b"));
    return g.add(biased, g.tile_rows(g.param(model.params, "pos"), latents.rows));
}

NodeId self_attention(Graph& g, const ClassifierModel& model, std::size_t layer, NodeId x,
                      std::vector<NodeId>* probs) {
    const std::size_t seq = seq_of(model);
    const auto& cfg = model.cfg;
    if (g.value(x).cols != cfg.d_model) throw ShapeMismatch("attention input width must equal d_model");
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
    NodeId out = 0;
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const NodeId q = g.matmul(x, g.param(model.params, head_key(layer, "wq", h)));
        const NodeId k = g.matmul(x, g.param(model.params, head_key(layer, "wk", h)));
        const NodeId v = g.matmul(x, g.param(model.params, head_key(layer, "wv", h)));
        const NodeId p = g.softmax_rows(g.scale(g.block_matmul_abt(q, k, seq), inv_sqrt));
        if (probs) probs->push_back(p);
        // Concatenate-then-project equals the sum of per-head projections.
        const NodeId proj = g.matmul(g.block_matmul(p, v, seq), g.param(model.params, head_key(layer, "wo", h)));
        out = h == 0 ? proj : g.add(out, proj);
    }
    return g.add(out, g.param(model.params, layer_key(layer, "bo")));
}

NodeId encoder_block(Graph& g, const ClassifierModel& model, std::size_t layer, NodeId x,
                     std::vector<NodeId>* probs) {
    const double eps = model.cfg.layer_norm_eps;
    const NodeId attn = self_attention(g, model, layer, g.layer_norm_rows(x, eps), probs);
    const NodeId y = g.add(x, attn);
    const NodeId hidden = g.relu(g.add(g.matmul(g.layer_norm_rows(y, eps), g.param(model.params, layer_key(layer, "ff_w1"))),
                                       g.param(model.params, layer_key(layer, "ff_b1"))));
    const NodeId ff = g.add(g.matmul(hidden, g.param(model.params, layer_key(layer, "ff_w2"))),
                            g.param(model.params, layer_key(layer, "ff_b2")));
    return g.add(y, ff);
}

NodeId forward(Graph& g, const ClassifierModel& model, const Tensor2& latents, std::vector<NodeId>* probs) {
    NodeId x = embed_tokens(g, model, latents);
    for (std::size_t l = 0; l < model.cfg.n_layers; ++l) x = encoder_block(g, model, l, x, probs);
    const NodeId pooled = g.block_mean_rows(x, model.seq_len);
    const NodeId logit = g.add(g.matmul(pooled, g.param(model.params, "out_w")), g.param(model.params, "out_b"));
    return g.sigmoid(logit);
}

NodeId loss(Graph& g, const ClassifierModel& model, const Tensor2& latents, const std::vector<int>& labels) {
    if (labels.size() != latents.rows) throw LengthMismatch("labels and latents disagree on row count");
    Tensor2 y(labels.size(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) y.data[i] = labels[i];
    return g.binary_cross_entropy(forward(g, model, latents), g.constant(std::move(y)));
}

std::vector<double> predict_proba(const ClassifierModel& model, const Tensor2& latents) {
    constexpr std::size_t chunk = 256;
    std::vector<double> out;
    out.reserve(latents.rows);
    for (std::size_t start = 0; start < latents.rows; start += chunk) {
        const std::size_t n = std::min(chunk, latents.rows - start);
        Tensor2 part(n, latents.cols);
        std::copy_n(latents.data.begin() + static_cast<std::ptrdiff_t>(start * latents.cols), n * latents.cols,
                    part.data.begin());
        Graph g;
        const auto& p = g.value(forward(g, model, part));
        out.insert(out.end(), p.data.begin(), p.data.end());
    }
    return out;
}

std::vector<int> predict_labels(const ClassifierModel& model, const Tensor2& latents) {
    std::vector<int> labels;
    for (double p : predict_proba(model, latents)) labels.push_back(decide(p).label);
    return labels;
}

DefectPrediction predict(const ClassifierModel& model, std::span<const double> z) {
    return decide(predict_proba(model, Tensor2(1, z.size(), {z.begin(), z.end()})).front());
}

ClassifierTrainResult train_classifier(const Tensor2& latents, const std::vector<int>& labels,
                                       const TransformerConfig& cfg, const ClassifierTrainOptions& opt,
                                       const CheckpointFn& on_checkpoint) {
    if (labels.size() != latents.rows) throw LengthMismatch("labels and latents disagree on row count");
    if (latents.rows == 0) throw TooFewRows("classifier training data is empty");
    if (opt.batch_size == 0) throw InvalidConfig("classifier batch_size must be >= 1");

    ClassifierTrainResult result;
    result.model = init_classifier(cfg, latents.cols, derive_seed(opt.seed, "init"));
    auto& model = result.model;
    Rng rng(derive_seed(opt.seed, "shuffle"));
    const diff::AdamOptions adam{.lr = opt.lr, .weight_decay = opt.weight_decay};

    std::vector<std::size_t> order(latents.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t width = latents.cols;
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t b = std::min(opt.batch_size, order.size() - start);
            Tensor2 batch(b, width);
            std::vector<int> y(b);
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t r = order[start + s];
                std::copy_n(latents.data.begin() + static_cast<std::ptrdiff_t>(r * width), width,
                            batch.data.begin() + static_cast<std::ptrdiff_t>(s * width));
                y[s] = labels[r];
            }
            Graph g;
            const NodeId l = loss(g, model, batch, y);
            diff::adam_step(model.params, g.backward(l), adam);
            total += g.value(l).data[0] * static_cast<double>(b);
        }
        result.loss_curve.push_back(total / static_cast<double>(latents.rows));
        if (on_checkpoint && std::find(opt.checkpoints.begin(), opt.checkpoints.end(), epoch) != opt.checkpoints.end())
            on_checkpoint(epoch, model);
    }
    return result;
}

std::string sidecar_json(const ClassifierModel& model) {
    nlohmann::ordered_json j;
    j["d_model"] = model.cfg.d_model;
    j["n_heads"] = model.cfg.n_heads;
    j["n_layers"] = model.cfg.n_layers;
    j["ff_hidden"] = model.cfg.ff_hidden;
    j["layer_norm_eps"] = model.cfg.layer_norm_eps;
    j["seq_len"] = model.seq_len;
    return j.dump(2) + "\n";
}

ClassifierModel from_artifacts(const std::string& sidecar, diff::ParamStore params) {
    const auto j = nlohmann::json::parse(sidecar);
    ClassifierModel m;
    m.cfg.d_model = j.at("d_model").get<std::size_t>();
    m.cfg.n_heads = j.at("n_heads").get<std::size_t>();
    m.cfg.n_layers = j.at("n_layers").get<std::size_t>();
    m.cfg.ff_hidden = j.at("ff_hidden").get<std::size_t>();
    m.cfg.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    m.seq_len = j.at("seq_len").get<std::size_t>();
    m.cfg.validate();
    // Shapes are checked against a fresh initialisation.
    const auto reference = init_classifier(m.cfg, m.seq_len, 0);
    for (const auto& [name, e] : reference.params.entries())
        if (!params.contains(name) || !params.get(name).same_shape(e.value))
            throw FormatError("classifier parameter '" + name + "' missing or misshapen");
    m.params = std::move(params);
    return m;
}

}  // namespace adeqvaet::transformer
