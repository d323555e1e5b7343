#include "adeqvaet/qvae.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet::qvae {

using diff::Graph;
using diff::NodeId;
using diff::Tensor2;
using quantum::Gate;
using quantum::Statevector;

namespace {

constexpr double kShift = std::numbers::pi / 2.0;

// Index of the first ansatz gate in build_circuit's output.
std::size_t encoding_gate_count(const Ansatz& a) { return a.n_qubits; }

std::size_t gates_per_layer(const Ansatz& a) { return a.n_qubits + (a.n_qubits > 1 ? a.n_qubits : 0); }

// Runs gates[from..] on a copy of `state` with gates[from] replaced by `first`.
Statevector run_suffix(Statevector state, const std::vector<Gate>& gates, std::size_t from, const Gate& first) {
    state.apply(first);
    for (std::size_t i = from + 1; i < gates.size(); ++i) state.apply(gates[i]);
    return state;
}

// Calls fn(k, plus_state, minus_state) for every ansatz angle k, sharing the
// prefix simulation across angles.
template <typename Fn>
void for_each_shift(const Ansatz& ansatz, double scale, std::span<const double> x, Fn&& fn) {
    const auto gates = build_circuit(ansatz, scale, x);
    Statevector state(ansatz.n_qubits);
    const std::size_t start = encoding_gate_count(ansatz);
    const std::size_t per_layer = gates_per_layer(ansatz);
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (i >= start) {
            const std::size_t in_layer = (i - start) % per_layer;
            if (in_layer < ansatz.n_qubits) {
                const std::size_t k = (i - start) / per_layer * ansatz.n_qubits + in_layer;
                Gate plus = gates[i];
                Gate minus = gates[i];
                plus.theta += kShift;
                minus.theta -= kShift;
                fn(k, run_suffix(state, gates, i, plus), run_suffix(state, gates, i, minus));
            }
        }
        state.apply(gates[i]);
    }
}

Tensor2 xavier(std::size_t in, std::size_t out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor2 t(in, out);
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace

void Ansatz::validate() const {
    if (n_qubits == 0 || n_qubits > Statevector::max_qubits) throw QubitOutOfRange("ansatz qubit count out of range");
    if (thetas.size() != n_layers * n_qubits)
        throw DimensionMismatch("ansatz expects " + std::to_string(n_layers * n_qubits) + " angles, got " +
                                std::to_string(thetas.size()));
    for (double t : thetas)
        if (!std::isfinite(t)) throw InvalidConfig("non-finite ansatz angle");
}

std::vector<Gate> build_circuit(const Ansatz& ansatz, double encoding_scale, std::span<const double> x) {
    ansatz.validate();
    if (x.empty()) throw DimensionMismatch("cannot encode an empty feature vector");
    const std::size_t n = ansatz.n_qubits;
    std::vector<Gate> gates;
    gates.reserve(n + ansatz.n_layers * gates_per_layer(ansatz));
    for (std::size_t q = 0; q < n; ++q) gates.push_back(Gate::ry(q, encoding_scale * x[q % x.size()]));
    for (std::size_t l = 0; l < ansatz.n_layers; ++l) {
        for (std::size_t q = 0; q < n; ++q) gates.push_back(Gate::ry(q, ansatz.thetas[l * n + q]));
        if (n > 1)
            for (std::size_t q = 0; q < n; ++q) gates.push_back(Gate::cnot(q, (q + 1) % n));
    }
    return gates;
}

std::vector<double> expectations(const Ansatz& ansatz, double encoding_scale, std::span<const double> x) {
    Statevector state(ansatz.n_qubits);
    for (const auto& g : build_circuit(ansatz, encoding_scale, x)) state.apply(g);
    std::vector<double> mu(ansatz.n_qubits);
    for (std::size_t q = 0; q < mu.size(); ++q) mu[q] = state.expectation_z(q);
    return mu;
}

Tensor2 parameter_shift_jacobian(const Ansatz& ansatz, double encoding_scale, std::span<const double> x) {
    Tensor2 jac(ansatz.n_qubits, ansatz.thetas.size());
    for_each_shift(ansatz, encoding_scale, x, [&](std::size_t k, const Statevector& plus, const Statevector& minus) {
        for (std::size_t q = 0; q < ansatz.n_qubits; ++q)
            jac(q, k) = 0.5 * (plus.expectation_z(q) - minus.expectation_z(q));
    });
    return jac;
}

void QvaeConfig::validate() const {
    if (n_qubits == 0 || n_qubits > Statevector::max_qubits) throw InvalidConfig("qvae n_qubits out of range");
    if (n_layers == 0) throw InvalidConfig("qvae n_layers must be >= 1");
    if (hidden == 0) throw InvalidConfig("qvae hidden width must be >= 1");
    if (!std::isfinite(encoding_scale)) throw InvalidConfig("qvae encoding_scale must be finite");
    if (!(beta >= 0.0)) throw InvalidConfig("qvae beta must be >= 0");
}

Ansatz QvaeModel::ansatz() const {
    return {cfg.n_qubits, cfg.n_layers, params.get("thetas").data};
}

std::vector<double> QvaeModel::logvar() const { return params.get("logvar").data; }

QvaeModel init_qvae(const QvaeConfig& cfg, std::size_t input_dim, std::uint64_t seed) {
    cfg.validate();
    if (input_dim == 0) throw DimensionMismatch("qvae input dimension must be >= 1");
    Rng rng(seed);
    QvaeModel m;
    m.cfg = cfg;
    m.input_dim = input_dim;
    Tensor2 thetas(1, cfg.n_layers * cfg.n_qubits);
    for (double& t : thetas.data) t = rng.uniform(-0.1, 0.1) * std::numbers::pi;
    m.params.add("thetas", std::move(thetas));
    m.params.add("logvar", Tensor2(1, cfg.n_qubits, 0.0));
    m.params.add("dec_w1", xavier(cfg.n_qubits, cfg.hidden, rng));
    m.params.add("dec_b1", Tensor2(1, cfg.hidden, 0.0));
    m.params.add("dec_w2", xavier(cfg.hidden, input_dim, rng));
    m.params.add("dec_b2", Tensor2(1, input_dim, 0.0));
    return m;
}

LatentVector encode(const QvaeModel& model, std::span<const double> x) {
    LatentVector lat;
    lat.mu = expectations(model.ansatz(), model.cfg.encoding_scale, x);
    lat.logvar = model.logvar();
    return lat;
}

std::vector<double> reparameterize(const LatentVector& lat, std::span<const double> eps) {
    if (eps.size() != lat.mu.size() || lat.logvar.size() != lat.mu.size())
        throw DimensionMismatch("reparameterize: eps/logvar length must equal latent dimension");
    std::vector<double> z(lat.mu.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = lat.mu[i] + std::exp(lat.logvar[i] / 2.0) * eps[i];
    return z;
}

std::vector<double> decode(const QvaeModel& model, std::span<const double> z) {
    if (z.size() != model.cfg.n_qubits) throw DimensionMismatch("decode: latent length mismatch");
    Graph g;
    const NodeId zin = g.constant(Tensor2(1, z.size(), {z.begin(), z.end()}));
    const NodeId h = g.tanh(g.add(g.matmul(zin, g.param(model.params, "dec_w1")), g.param(model.params, "dec_b1")));
    const NodeId out = g.add(g.matmul(h, g.param(model.params, "dec_w2")), g.param(model.params, "dec_b2"));
    return g.value(out).data;
}

double vae_loss(std::span<const double> x, std::span<const double> x_hat, const LatentVector& lat, double beta) {
    if (x.size() != x_hat.size() || x.empty()) throw DimensionMismatch("vae_loss: reconstruction length mismatch");
    if (lat.logvar.size() != lat.mu.size()) throw DimensionMismatch("vae_loss: logvar length mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
    mse /= static_cast<double>(x.size());
    double kl = 0.0;
    for (std::size_t i = 0; i < lat.mu.size(); ++i)
        kl += lat.mu[i] * lat.mu[i] + std::exp(lat.logvar[i]) - 1.0 - lat.logvar[i];
    return mse + beta * 0.5 * kl;
}

std::vector<double> parameter_shift_grad(const QvaeModel& model, std::span<const double> x,
                                         std::span<const double> downstream_grad) {
    const Ansatz ansatz = model.ansatz();
    if (downstream_grad.size() != ansatz.n_qubits)
        throw DimensionMismatch("downstream gradient length must equal n_qubits");
    // Fold the downstream weights into one diagonal observable sum_q g_q Z_q.
    const std::size_t dim = std::size_t{1} << ansatz.n_qubits;
    std::vector<double> diag(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t q = 0; q < ansatz.n_qubits; ++q)
            diag[i] += ((i >> q) & 1U) ? -downstream_grad[q] : downstream_grad[q];

    std::vector<double> grad(ansatz.thetas.size(), 0.0);
    for_each_shift(ansatz, model.cfg.encoding_scale, x,
                   [&](std::size_t k, const Statevector& plus, const Statevector& minus) {
                       grad[k] = 0.5 * (plus.expectation_diagonal(diag) - minus.expectation_diagonal(diag));
                   });
    return grad;
}

QvaeTrainResult train_qvae(const DatasetTable& data, QvaeModel model, const QvaeTrainOptions& opt) {
    if (opt.epochs == 0) throw InvalidConfig("qvae epochs must be >= 1");
    if (opt.batch_size == 0) throw InvalidConfig("qvae batch_size must be >= 1");
    if (data.n_cols != model.input_dim) throw DimensionMismatch("qvae input dimension does not match data");
    if (data.n_rows == 0) throw TooFewRows("qvae training data is empty");

    const std::size_t nq = model.cfg.n_qubits;
    const std::size_t dim = data.n_cols;
    Rng rng(opt.seed);
    std::vector<std::size_t> order(data.n_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const diff::AdamOptions adam{.lr = opt.lr, .weight_decay = opt.weight_decay};

    QvaeTrainResult result;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t b = std::min(opt.batch_size, order.size() - start);
            const Ansatz ansatz = model.ansatz();
            Tensor2 mu(b, nq);
            Tensor2 x(b, dim);
            Tensor2 eps(b, nq);
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t r = order[start + s];
                const auto row = data.row(r);
                const auto m = expectations(ansatz, model.cfg.encoding_scale, row);
                std::copy(m.begin(), m.end(), mu.data.begin() + static_cast<std::ptrdiff_t>(s * nq));
                std::copy(row.begin(), row.end(), x.data.begin() + static_cast<std::ptrdiff_t>(s * dim));
                for (std::size_t q = 0; q < nq; ++q) eps(s, q) = rng.normal();
            }

            Graph g;
            const NodeId mu_n = g.variable(mu);
            const NodeId lv = g.param(model.params, "logvar");
            const NodeId sigma = g.tile_rows(g.exp(g.scale(lv, 0.5)), b);
            const NodeId z = g.add(mu_n, g.mul(sigma, g.constant(eps)));
            const NodeId h = g.tanh(g.add(g.matmul(z, g.param(model.params, "dec_w1")), g.param(model.params, "dec_b1")));
            const NodeId xh = g.add(g.matmul(h, g.param(model.params, "dec_w2")), g.param(model.params, "dec_b2"));
            const NodeId recon = g.mse(xh, g.constant(x));
            // Batch-mean KL: 0.5 * (sum(mu^2) / b + sum(exp(lv)) - nq - sum(lv))
            NodeId kl = g.add(g.scale(g.sum_all(g.mul(mu_n, mu_n)), 1.0 / static_cast<double>(b)),
                              g.sum_all(g.exp(lv)));
            kl = g.add(kl, g.scale(g.sum_all(lv), -1.0));
            kl = g.add(kl, g.constant(Tensor2(1, 1, -static_cast<double>(nq))));
            const NodeId loss = g.add(recon, g.scale(kl, 0.5 * model.cfg.beta));

            auto grads = g.backward(loss);
            const Tensor2& dmu = g.grad(mu_n);
            Tensor2 dtheta(1, ansatz.thetas.size());
            for (std::size_t s = 0; s < b; ++s) {
                const auto row = data.row(order[start + s]);
                const auto gs = parameter_shift_grad(
                    model, row, std::span<const double>(dmu.data).subspan(s * nq, nq));
                for (std::size_t k = 0; k < gs.size(); ++k) dtheta.data[k] += gs[k];
            }
            grads["thetas"] = std::move(dtheta);
            diff::adam_step(model.params, grads, adam);
            epoch_loss += g.value(loss).data[0] * static_cast<double>(b);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(data.n_rows));
    }
    result.model = std::move(model);
    return result;
}

Tensor2 encode_table(const QvaeModel& model, const DatasetTable& data) {
    const std::size_t nq = model.cfg.n_qubits;
    const Ansatz ansatz = model.ansatz();
    Tensor2 out(data.n_rows, nq);
    for (std::size_t r = 0; r < data.n_rows; ++r) {
        const auto mu = expectations(ansatz, model.cfg.encoding_scale, data.row(r));
        std::copy(mu.begin(), mu.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * nq));
    }
    return out;
}

std::string sidecar_json(const QvaeModel& model) {
    nlohmann::ordered_json j;
    j["n_qubits"] = model.cfg.n_qubits;
    j["n_layers"] = model.cfg.n_layers;
    j["encoding_scale"] = model.cfg.encoding_scale;
    j["beta"] = model.cfg.beta;
    j["hidden"] = model.cfg.hidden;
    j["input_dim"] = model.input_dim;
    j["thetas"] = model.params.get("thetas").data;
    j["logvar"] = model.params.get("logvar").data;
    return j.dump(2) + "\n";
}

QvaeModel from_artifacts(const std::string& sidecar, diff::ParamStore params) {
    const auto j = nlohmann::json::parse(sidecar);
    QvaeModel m;
    m.cfg.n_qubits = j.at("n_qubits").get<std::size_t>();
    m.cfg.n_layers = j.at("n_layers").get<std::size_t>();
    m.cfg.encoding_scale = j.at("encoding_scale").get<double>();
    m.cfg.beta = j.at("beta").get<double>();
    m.cfg.hidden = j.at("hidden").get<std::size_t>();
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.cfg.validate();
    m.params = std::move(params);
    if (m.params.get("thetas").size() != m.cfg.n_layers * m.cfg.n_qubits)
        throw FormatError("qvae parameter file does not match sidecar");
    return m;
}

}  // namespace adeqvaet::qvae
