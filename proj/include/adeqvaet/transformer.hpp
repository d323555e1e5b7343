#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adeqvaet/diffcore.hpp"

namespace adeqvaet::transformer {

struct TransformerConfig {
    std::size_t d_model = 16;
    std::size_t n_heads = 2;
    std::size_t n_layers = 1;
    std::size_t ff_hidden = 32;
    double layer_norm_eps = 1e-5;

    std::size_t head_dim() const { return d_model / n_heads; }
    void validate() const;
};

struct DefectPrediction {
    double probability = 0.5;
    int label = 1;
};

/// label = 1 iff probability >= 0.5
DefectPrediction decide(double probability);

// Parameter naming in the store:
//   embed_w, embed_b (1 x d), pos (seq x d)
//   L{l}.wq{h}, L{l}.wk{h}, L{l}.wv{h} (d x dh), L{l}.wo{h} (dh x d), L{l}.bo (1 x d)
//   L{l}.ff_w1 (d x ff), L{l}.ff_b1, L{l}.ff_w2 (ff x d), L{l}.ff_b2
//   out_w (d x 1), out_b (1 x 1)
struct ClassifierModel {
    TransformerConfig cfg;
    std::size_t seq_len = 0;  // latent dimension
    diff::ParamStore params;
};

ClassifierModel init_classifier(const TransformerConfig& cfg, std::size_t seq_len, std::uint64_t seed);

/// token (b, i) = z[b, i] * embed_w + embed_b + pos[i]; latents is (batch x seq).
/// Output stacks the batch: ((batch * seq) x d_model).
diff::NodeId embed_tokens(diff::Graph& g, const ClassifierModel& model, const diff::Tensor2& latents);

/// Unmasked multi-head scaled dot-product attention over each sequence of
/// `seq` consecutive rows. Probability nodes are appended to `probs` when given.
diff::NodeId self_attention(diff::Graph& g, const ClassifierModel& model, std::size_t layer, diff::NodeId x,
                            std::vector<diff::NodeId>* probs = nullptr);

/// Pre-norm residual block: y = x + attn(LN(x)); y + FF(LN(y)).
diff::NodeId encoder_block(diff::Graph& g, const ClassifierModel& model, std::size_t layer, diff::NodeId x,
                           std::vector<diff::NodeId>* probs = nullptr);

/// Full forward pass to probabilities (batch x 1).
diff::NodeId forward(diff::Graph& g, const ClassifierModel& model, const diff::Tensor2& latents,
                     std::vector<diff::NodeId>* probs = nullptr);

/// Mean BCE of the forward pass against labels.
diff::NodeId loss(diff::Graph& g, const ClassifierModel& model, const diff::Tensor2& latents,
                  const std::vector<int>& labels);

DefectPrediction predict(const ClassifierModel& model, std::span<const double> z);

/// Probabilities for every row of a (rows x seq) latent matrix.
std::vector<double> predict_proba(const ClassifierModel& model, const diff::Tensor2& latents);
std::vector<int> predict_labels(const ClassifierModel& model, const diff::Tensor2& latents);

struct ClassifierTrainOptions {
    double lr = 0.005;
    double weight_decay = 1e-4;
    std::size_t epochs = 500;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<std::size_t> checkpoints;  // epochs (1-based) at which on_checkpoint fires
};

struct ClassifierTrainResult {
    ClassifierModel model;
    std::vector<double> loss_curve;  // epoch-mean BCE
};

using CheckpointFn = std::function<void(std::size_t epoch, const ClassifierModel&)>;

ClassifierTrainResult train_classifier(const diff::Tensor2& latents, const std::vector<int>& labels,
                                       const TransformerConfig& cfg, const ClassifierTrainOptions& opt,
                                       const CheckpointFn& on_checkpoint = {});

std::string sidecar_json(const ClassifierModel& model);
ClassifierModel from_artifacts(const std::string& sidecar, diff::ParamStore params);

}  // namespace adeqvaet::transformer
