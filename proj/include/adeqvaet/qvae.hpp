#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adeqvaet/data_ingest.hpp"
#include "adeqvaet/diffcore.hpp"
#include "adeqvaet/statevector.hpp"

namespace adeqvaet::qvae {

/// Hardware-efficient ansatz: each layer is one RY per qubit followed by a
/// CNOT ring q -> (q + 1) mod n. A single qubit has no ring.
struct Ansatz {
    std::size_t n_qubits = 0;
    std::size_t n_layers = 0;
    std::vector<double> thetas;  // layer-major, n_layers * n_qubits

    void validate() const;
};

/// Encoding RY gates followed by the ansatz layers.
std::vector<quantum::Gate> build_circuit(const Ansatz& ansatz, double encoding_scale,
                                         std::span<const double> x);

/// <Z_q> for every qubit after running the circuit from |0...0>.
std::vector<double> expectations(const Ansatz& ansatz, double encoding_scale, std::span<const double> x);

/// d<Z_q>/dtheta_k by the two-term shift rule; row q, column k.
diff::Tensor2 parameter_shift_jacobian(const Ansatz& ansatz, double encoding_scale,
                                       std::span<const double> x);

struct QvaeConfig {
    std::size_t n_qubits = 8;
    std::size_t n_layers = 2;
    double encoding_scale = 0.5;
    double beta = 0.01;  // KL weight
    std::size_t hidden = 16;

    void validate() const;
};

/// Circuit angles ("thetas"), a free log-variance vector ("logvar") and the
/// decoder z -> tanh(z W1 + b1) W2 + b2, all held in one ParamStore.
struct QvaeModel {
    QvaeConfig cfg;
    std::size_t input_dim = 0;
    diff::ParamStore params;

    Ansatz ansatz() const;
    std::vector<double> logvar() const;
};

QvaeModel init_qvae(const QvaeConfig& cfg, std::size_t input_dim, std::uint64_t seed);

struct LatentVector {
    std::vector<double> mu;
    std::vector<double> logvar;
    std::vector<double> z;  // empty until reparameterize
};

/// Deterministic: no sampling happens here.
LatentVector encode(const QvaeModel& model, std::span<const double> x);

/// z = mu + exp(logvar / 2) * eps
std::vector<double> reparameterize(const LatentVector& lat, std::span<const double> eps);

std::vector<double> decode(const QvaeModel& model, std::span<const double> z);

/// MSE(x, x_hat) + beta * 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)
double vae_loss(std::span<const double> x, std::span<const double> x_hat, const LatentVector& lat,
                double beta);

/// dLoss/dthetas given dLoss/dmu, using two shifted circuits per angle.
std::vector<double> parameter_shift_grad(const QvaeModel& model, std::span<const double> x,
                                         std::span<const double> downstream_grad);

struct QvaeTrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 0.02;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

struct QvaeTrainResult {
    QvaeModel model;
    std::vector<double> loss_curve;  // epoch-mean loss
};

QvaeTrainResult train_qvae(const DatasetTable& data, QvaeModel model, const QvaeTrainOptions& opt);

/// mu for every row; shape (rows x n_qubits).
diff::Tensor2 encode_table(const QvaeModel& model, const DatasetTable& data);

/// JSON sidecar describing the model (config, thetas, logvar).
std::string sidecar_json(const QvaeModel& model);
QvaeModel from_artifacts(const std::string& sidecar, diff::ParamStore params);

}  // namespace adeqvaet::qvae
