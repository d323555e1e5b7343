#include "adeqvaet/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet::eval {

using nlohmann::ordered_json;

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw LengthMismatch("predictions (" + std::to_string(predictions.size()) + ") and labels (" +
                             std::to_string(labels.size()) + ") differ in length");
    if (predictions.empty()) throw LengthMismatch("confusion matrix needs at least one prediction");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool p = predictions[i] == 1;
        const bool y = labels[i] == 1;
        if (p && y)
            ++cm.tp;
        else if (p)
            ++cm.fp;
        else if (y)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

MetricsRow metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrix("metrics of an empty confusion matrix");
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    MetricsRow row;
    row.accuracy = ratio(cm.tp + cm.tn, cm.total());
    row.precision = ratio(cm.tp, cm.tp + cm.fp);
    row.recall = ratio(cm.tp, cm.tp + cm.fn);
    const double pr = row.precision + row.recall;
    row.f1 = pr == 0.0 ? 0.0 : 2.0 * row.precision * row.recall / pr;
    row.counts = cm;
    return row;
}

PipelineSeeds PipelineSeeds::from_master(std::uint64_t master) {
    return {derive_seed(master, "split"), derive_seed(master, "preprocess"), derive_seed(master, "qvae"),
            derive_seed(master, "classifier"), derive_seed(master, "ade")};
}

TrainedPipeline train_and_evaluate(const DatasetTable& train, const DatasetTable& test, const PipelineConfig& cfg,
                                   const PipelineSeeds& seeds, int tp) {
    TrainedPipeline out;
    auto qvae_opt = cfg.qvae_train;
    qvae_opt.seed = derive_seed(seeds.qvae, "train");
    auto trained_q = qvae::train_qvae(train, qvae::init_qvae(cfg.qvae, train.n_cols, derive_seed(seeds.qvae, "init")),
                                      qvae_opt);
    out.qvae = std::move(trained_q.model);
    out.qvae_loss = std::move(trained_q.loss_curve);
    spdlog::debug("tp {}: qvae loss {:.4f} -> {:.4f}", tp, out.qvae_loss.front(), out.qvae_loss.back());

    const auto z_train = qvae::encode_table(out.qvae, train);
    const auto z_test = qvae::encode_table(out.qvae, test);

    auto score = [&](const transformer::ClassifierModel& model) {
        auto row = metrics(confusion_matrix(transformer::predict_labels(model, z_test), test.labels));
        row.tp_percent = tp;
        return row;
    };

    auto cls_opt = cfg.classifier_train;
    cls_opt.seed = seeds.classifier;
    std::sort(cls_opt.checkpoints.begin(), cls_opt.checkpoints.end());
    cls_opt.checkpoints.erase(std::unique(cls_opt.checkpoints.begin(), cls_opt.checkpoints.end()),
                              cls_opt.checkpoints.end());
    auto trained_c = transformer::train_classifier(z_train, train.labels, cfg.classifier, cls_opt,
                                                   [&](std::size_t epoch, const transformer::ClassifierModel& m) {
                                                       auto row = score(m);
                                                       row.epoch = epoch;
                                                       out.rows.push_back(row);
                                                   });
    out.classifier = std::move(trained_c.model);
    out.classifier_loss = std::move(trained_c.loss_curve);
    out.rows.push_back(score(out.classifier));
    return out;
}

SweepReport tp_sweep(const DatasetTable& dataset, const std::vector<int>& tps, const PipelineConfig& cfg,
                     std::uint64_t master_seed, std::size_t threads) {
    if (tps.empty()) throw InvalidConfig("tp sweep needs at least one training percentage");
    dataset.validate();
    const auto start = std::chrono::steady_clock::now();
    SweepReport report;
    report.seeds = PipelineSeeds::from_master(master_seed);

    std::vector<std::vector<MetricsRow>> per_tp(tps.size());
    std::vector<std::exception_ptr> errors(tps.size());
    auto run_tp = [&](std::size_t i) {
        try {
            const int tp = tps[i];
            const auto split = stratified_split(dataset, tp, report.seeds.split);
            auto pre_cfg = cfg.preprocess;
            pre_cfg.seed = report.seeds.preprocess;
            const auto fitted = anra::preprocess(split.train, pre_cfg);
            const auto test = anra::transform_heldout(split.test, fitted);
            per_tp[i] = train_and_evaluate(fitted.table, test, cfg, report.seeds, tp).rows;
            spdlog::info("tp {} done: final accuracy {:.4f}, f1 {:.4f}", tp, per_tp[i].back().accuracy,
                         per_tp[i].back().f1);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), tps.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < tps.size(); ++i) run_tp(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < tps.size(); i += workers) run_tp(i);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (auto& rows : per_tp) report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    if (name == "json") return ReportFormat::json;
    throw UnknownFormat("unknown report format '" + name + "'");
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
    return buf;
}

std::string pct_raw(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string row_label(const MetricsRow& r) {
    return r.epoch ? r.model + " (epoch " + std::to_string(*r.epoch) + ")" : r.model;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_percent(std::string cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.back() == '%') cell = trim(cell.substr(0, cell.size() - 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size()) throw FormatError("bad percentage '" + cell + "' in baselines file");
    return v;
}

std::vector<int> tps_in_order(const SweepReport& report) {
    std::vector<int> tps;
    for (const auto& r : report.rows)
        if (std::find(tps.begin(), tps.end(), r.tp_percent) == tps.end()) tps.push_back(r.tp_percent);
    return tps;
}

ordered_json row_json(const MetricsRow& r) {
    ordered_json j;
    j["model"] = r.model;
    j["tp"] = r.tp_percent;
    if (r.epoch)
        j["epoch"] = *r.epoch;
    else
        j["epoch"] = "final";
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["confusion"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
    return j;
}

}  // namespace

std::vector<BaselineRow> parse_baselines_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<BaselineRow> rows;
    if (!std::getline(in, line)) throw FormatError("baselines file is empty");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(trim(cell));
    }
    const std::array<std::string, 6> want = {"model", "tp", "accuracy", "precision", "recall", "f1"};
    std::array<std::size_t, 6> pos{};
    for (std::size_t i = 0; i < want.size(); ++i) {
        const auto it = std::find(header.begin(), header.end(), want[i]);
        if (it == header.end()) throw MissingColumn(want[i]);
        pos[i] = static_cast<std::size_t>(it - header.begin());
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() < header.size()) throw FormatError("short row in baselines file: '" + line + "'");
        BaselineRow b;
        b.model = cells[pos[0]];
        b.tp = static_cast<int>(parse_percent(cells[pos[1]]));
        b.accuracy = parse_percent(cells[pos[2]]);
        b.precision = parse_percent(cells[pos[3]]);
        b.recall = parse_percent(cells[pos[4]]);
        b.f1 = parse_percent(cells[pos[5]]);
        rows.push_back(std::move(b));
    }
    return rows;
}

std::vector<BaselineRow> ordered_baselines(const std::vector<BaselineRow>& all, int tp) {
    static const std::array<std::string, 6> canonical = {"SVM", "DT", "RF", "LR", "QVA", "DE"};
    std::vector<BaselineRow> out;
    for (const auto& name : canonical)
        for (const auto& b : all)
            if (b.tp == tp && b.model == name) out.push_back(b);
    for (const auto& b : all)
        if (b.tp == tp && std::find(canonical.begin(), canonical.end(), b.model) == canonical.end()) out.push_back(b);
    return out;
}

std::string render_report(const SweepReport& report, ReportFormat format, const std::vector<BaselineRow>& baselines) {
    if (report.rows.empty()) throw EmptyReport("report has no rows");
    switch (format) {
        case ReportFormat::json: {
            ordered_json j;
            j["meta"]["config_hash"] = report.config_hash;
            j["meta"]["seeds"] = {{"split", report.seeds.split},
                                  {"preprocess", report.seeds.preprocess},
                                  {"qvae", report.seeds.qvae},
                                  {"classifier", report.seeds.classifier},
                                  {"ade", report.seeds.ade}};
            j["rows"] = ordered_json::array();
            for (const auto& r : report.rows) j["rows"].push_back(row_json(r));
            return j.dump(2) + "\n";
        }
        case ReportFormat::csv: {
            std::string out = "model,tp,epoch,accuracy,precision,recall,f1\n";
            for (int tp : tps_in_order(report)) {
                for (const auto& b : ordered_baselines(baselines, tp))
                    out += b.model + "," + std::to_string(tp) + ",," + pct_raw(b.accuracy) + "," +
                           pct_raw(b.precision) + "," + pct_raw(b.recall) + "," + pct_raw(b.f1) + "\n";
                for (const auto& r : report.rows) {
                    if (r.tp_percent != tp) continue;
                    out += r.model + "," + std::to_string(tp) + "," + (r.epoch ? std::to_string(*r.epoch) : "final") +
                           "," + pct(r.accuracy) + "," + pct(r.precision) + "," + pct(r.recall) + "," + pct(r.f1) + "\n";
                }
            }
            return out;
        }
        case ReportFormat::markdown: {
            std::string out = "# Defect prediction results\n";
            for (int tp : tps_in_order(report)) {
                out += "\n## TP " + std::to_string(tp) + "\n\n";
                out += "| Model | Accuracy | Precision | Recall | F1-score |\n";
                out += "|---|---|---|---|---|\n";
                for (const auto& b : ordered_baselines(baselines, tp))
                    out += "| " + b.model + " | " + pct_raw(b.accuracy) + " | " + pct_raw(b.precision) + " | " +
                           pct_raw(b.recall) + " | " + pct_raw(b.f1) + " |\n";
                for (const auto& r : report.rows)
                    if (r.tp_percent == tp)
                        out += "| " + row_label(r) + " | " + pct(r.accuracy) + " | " + pct(r.precision) + " | " +
                               pct(r.recall) + " | " + pct(r.f1) + " |\n";
            }
            out += "\nConfig hash: `" + report.config_hash + "`\n";
            return out;
        }
    }
    throw UnknownFormat("unknown report format");
}

SweepReport parse_report_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SweepReport r;
    r.config_hash = j.at("meta").at("config_hash").get<std::string>();
    const auto& s = j.at("meta").at("seeds");
    r.seeds = {s.at("split").get<std::uint64_t>(), s.at("preprocess").get<std::uint64_t>(),
               s.at("qvae").get<std::uint64_t>(), s.at("classifier").get<std::uint64_t>(),
               s.at("ade").get<std::uint64_t>()};
    for (const auto& row : j.at("rows")) {
        MetricsRow m;
        m.model = row.at("model").get<std::string>();
        m.tp_percent = row.at("tp").get<int>();
        if (row.at("epoch").is_number()) m.epoch = row.at("epoch").get<std::size_t>();
        m.accuracy = row.at("accuracy").get<double>();
        m.precision = row.at("precision").get<double>();
        m.recall = row.at("recall").get<double>();
        m.f1 = row.at("f1").get<double>();
        const auto& c = row.at("confusion");
        m.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>(),
                    c.at("tn").get<std::size_t>()};
        r.rows.push_back(std::move(m));
    }
    return r;
}

}  // namespace adeqvaet::eval
