#include "adeqvaet/commands.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adeqvaet/ade.hpp"
#include "adeqvaet/anra.hpp"
#include "adeqvaet/artifacts.hpp"
#include "adeqvaet/error.hpp"
#include "adeqvaet/eval.hpp"
#include "adeqvaet/qvae.hpp"
#include "adeqvaet/rng.hpp"
#include "adeqvaet/toy_data.hpp"
#include "adeqvaet/transformer.hpp"

namespace adeqvaet::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string trim_cell(std::string s) {
    const auto keep = [](unsigned char c) { return !std::isspace(c) && c != '"'; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), keep));
    s.erase(std::find_if(s.rbegin(), s.rend(), keep).base(), s.end());
    return s;
}

ordered_json metrics_json(const eval::MetricsRow& r) {
    return {{"accuracy", r.accuracy},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"confusion", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}}};
}

eval::PipelineConfig effective_pipeline(const RunConfig& cfg) {
    auto p = cfg.pipeline;
    if (cfg.tuned_theta) apply_theta_file(p, *cfg.tuned_theta);
    return p;
}

PreprocessedArtifact load_preprocessed(const RunConfig& cfg) {
    const auto path = stage_dir(cfg, "preprocess") / "preprocessed.bin";
    if (!fs::exists(path)) throw IoError("missing preprocessed artifacts '" + path.string() + "'; run preprocess first");
    return deserialize_preprocessed(read_file(path));
}

}  // namespace

RunConfig resolve_config(const fs::path& config_path, const Overrides& o) {
    RunConfig cfg = load_config(config_path);
    if (o.data) cfg.data = *o.data;
    if (o.out) cfg.out = *o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    cfg.validate();
    return cfg;
}

DatasetTable load_dataset(const RunConfig& cfg) {
    if (!fs::exists(cfg.data)) throw IoError("data file '" + cfg.data.string() + "' does not exist");
    const std::string text = read_file(cfg.data);
    DatasetSchema schema = cfg.schema;
    if (cfg.features) {
        schema.feature_names = *cfg.features;
    } else {
        std::istringstream in(text);
        std::string header, cell;
        std::getline(in, header);
        std::istringstream cells(header);
        while (std::getline(cells, cell, ',')) {
            cell = trim_cell(cell);
            if (cell != schema.label_name) schema.feature_names.push_back(cell);
        }
    }
    return parse_csv(text, schema);
}

fs::path stage_dir(const RunConfig& cfg, const char* stage) { return cfg.out / stage; }

void cmd_preprocess(const RunConfig& cfg) {
    cfg.validate();
    const auto seeds = eval::PipelineSeeds::from_master(cfg.seed);
    const auto data = load_dataset(cfg);
    spdlog::info("loaded {} rows x {} features from {}", data.n_rows, data.n_cols, cfg.data.string());

    const auto split = stratified_split(data, cfg.tp, seeds.split);
    auto pre_cfg = cfg.pipeline.preprocess;
    pre_cfg.seed = seeds.preprocess;
    auto fitted = anra::preprocess(split.train, pre_cfg);

    PreprocessedArtifact a;
    a.tp = cfg.tp;
    a.split_seed = seeds.split;
    a.test = anra::transform_heldout(split.test, fitted);
    a.n_real_train = fitted.report.rows_out - fitted.report.synthetic_rows_added;
    a.train = std::move(fitted.table);
    a.medians = fitted.medians;
    a.stats = fitted.stats;
    a.report = fitted.report;

    const auto dir = stage_dir(cfg, "preprocess");
    write_file(dir / "preprocessed.bin", serialize_preprocessed(a));

    const auto& rep = a.report;
    ordered_json j;
    j["tp"] = a.tp;
    j["train_rows_in"] = rep.rows_in;
    j["test_rows"] = a.test.n_rows;
    j["duplicates_removed"] = rep.duplicates_removed;
    j["cells_imputed"] = rep.cells_imputed;
    j["cells_winsorized"] = rep.cells_winsorized;
    j["synthetic_rows_added"] = rep.synthetic_rows_added;
    j["train_rows_out"] = rep.rows_out;
    j["config_hash"] = config_hash(cfg);
    write_file(dir / "report.json", j.dump(2) + "\n");
    spdlog::info("preprocess: {} -> {} training rows ({} synthetic), {} test rows", rep.rows_in, rep.rows_out,
                 rep.synthetic_rows_added, a.test.n_rows);
}

void cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const auto pipeline = effective_pipeline(cfg);
    const auto art = load_preprocessed(cfg);
    const auto seeds = eval::PipelineSeeds::from_master(cfg.seed);
    const auto run = eval::train_and_evaluate(art.train, art.test, pipeline, seeds, art.tp);

    const auto dir = stage_dir(cfg, "train");
    fs::create_directories(dir);
    run.qvae.params.save(dir / "qvae.params");
    write_file(dir / "qvae.json", qvae::sidecar_json(run.qvae));
    run.classifier.params.save(dir / "classifier.params");
    write_file(dir / "classifier.json", transformer::sidecar_json(run.classifier));

    ordered_json log;
    log["qvae"] = ordered_json::array();
    for (std::size_t e = 0; e < run.qvae_loss.size(); ++e)
        log["qvae"].push_back({{"epoch", e + 1}, {"loss", run.qvae_loss[e]}});
    log["classifier"] = ordered_json::array();
    for (std::size_t e = 0; e < run.classifier_loss.size(); ++e) {
        ordered_json rec = {{"epoch", e + 1}, {"loss", run.classifier_loss[e]}};
        for (const auto& r : run.rows)
            if (r.epoch && *r.epoch == e + 1) rec["test"] = metrics_json(r);
        log["classifier"].push_back(std::move(rec));
    }
    log["final"] = metrics_json(run.rows.back());
    log["config_hash"] = config_hash(cfg);
    write_file(dir / "training_log.json", log.dump(2) + "\n");
    spdlog::info("train: final test accuracy {:.4f}, f1 {:.4f}", run.rows.back().accuracy, run.rows.back().f1);
}

void cmd_tune(const RunConfig& cfg) {
    cfg.validate();
    const auto art = load_preprocessed(cfg);
    const auto seeds = eval::PipelineSeeds::from_master(cfg.seed);
    const auto base = effective_pipeline(cfg);

    // Inner validation split over the real training rows only; synthetic
    // rows are regenerated for the inner training part.
    std::vector<std::size_t> real(art.n_real_train);
    std::iota(real.begin(), real.end(), std::size_t{0});
    const auto inner = stratified_split(art.train.select_rows(real), cfg.tune.inner_tp,
                                        derive_seed(seeds.ade, "inner-split"));
    auto smote_cfg = base.preprocess;
    smote_cfg.seed = derive_seed(seeds.ade, "inner-smote");
    const auto inner_train = anra::smote_balance(inner.train, smote_cfg).table;

    auto qopt = base.qvae_train;
    qopt.seed = derive_seed(seeds.qvae, "train");
    const auto q = qvae::train_qvae(inner_train, qvae::init_qvae(base.qvae, inner_train.n_cols,
                                                                 derive_seed(seeds.qvae, "init")),
                                    qopt)
                       .model;
    const auto z_train = qvae::encode_table(q, inner_train);
    const auto z_val = qvae::encode_table(q, inner.test);
    spdlog::info("tune: {} inner-train rows, {} validation rows", inner_train.n_rows, inner.test.n_rows);

    const auto& space = cfg.tune.space;
    const ade::Objective objective = [&](std::span<const double> theta) {
        auto p = base;
        apply_theta(p, space, {theta.begin(), theta.end()});
        auto opt = p.classifier_train;
        opt.epochs = cfg.tune.classifier_epochs;
        opt.checkpoints.clear();
        opt.seed = seeds.classifier;
        const auto model = transformer::train_classifier(z_train, inner_train.labels, p.classifier, opt).model;
        return eval::metrics(eval::confusion_matrix(transformer::predict_labels(model, z_val), inner.test.labels)).f1;
    };

    auto ade_cfg = cfg.tune.ade;
    ade_cfg.seed = seeds.ade;
    ade_cfg.threads = cfg.threads;
    const auto result = ade::maximize(objective, space, ade_cfg);

    const auto dir = stage_dir(cfg, "tune");
    ordered_json best;
    best["theta"] = ordered_json::object();
    for (std::size_t i = 0; i < space.size(); ++i) best["theta"][space.dims[i].name] = result.best_theta[i];
    best["f1"] = result.best_value;
    best["generations_run"] = result.generations_run;
    best["evaluations"] = result.evaluations.size();
    best["config_hash"] = config_hash(cfg);
    write_file(dir / "best_theta.json", best.dump(2) + "\n");
    write_file(dir / "ade_history.jsonl", ade::history_jsonl(result, space));

    std::string evals;
    for (const auto& e : result.evaluations) {
        ordered_json rec;
        rec["gen"] = e.gen;
        rec["id"] = e.id;
        rec["theta"] = ordered_json::object();
        for (std::size_t i = 0; i < space.size(); ++i) rec["theta"][space.dims[i].name] = e.theta[i];
        if (e.failed)
            rec["f1"] = nullptr;
        else
            rec["f1"] = e.value;
        rec["failed"] = e.failed;
        evals += rec.dump() + "\n";
    }
    write_file(dir / "evaluations.jsonl", evals);
    spdlog::info("tune: best validation f1 {:.4f} after {} generations, {} evaluations", result.best_value,
                 result.generations_run, result.evaluations.size());
}

void cmd_evaluate(const RunConfig& cfg, const std::optional<fs::path>& baselines_path) {
    cfg.validate();
    std::vector<eval::BaselineRow> baselines;
    if (baselines_path) baselines = eval::parse_baselines_csv(read_file(*baselines_path));
    const auto pipeline = effective_pipeline(cfg);
    const auto data = load_dataset(cfg);

    auto report = eval::tp_sweep(data, cfg.tps, pipeline, cfg.seed, cfg.threads);
    report.config_hash = config_hash(cfg);

    const auto dir = stage_dir(cfg, "evaluate");
    write_file(dir / "report.json", eval::render_report(report, eval::ReportFormat::json));
    write_file(dir / "report.csv", eval::render_report(report, eval::ReportFormat::csv, baselines));
    write_file(dir / "report.md", eval::render_report(report, eval::ReportFormat::markdown, baselines));
    ordered_json info = {{"wall_time_s", report.wall_time_s}, {"threads", cfg.threads}, {"config_hash", report.config_hash}};
    write_file(dir / "run_info.json", info.dump(2) + "\n");
    spdlog::info("evaluate: {} rows written to {} in {:.1f} s", report.rows.size(), dir.string(), report.wall_time_s);
}

void cmd_gen_toy_data(const fs::path& out, std::uint64_t seed, std::size_t rows) {
    ToyDataOptions opt;
    opt.seed = seed;
    opt.rows = rows;
    write_file(out, to_csv(make_toy_dataset(opt)));
    spdlog::info("wrote {} toy rows to {}", rows, out.string());
}

}  // namespace adeqvaet::cli
