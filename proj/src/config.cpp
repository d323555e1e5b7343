#include "adeqvaet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adeqvaet/error.hpp"
#include "adeqvaet/rng.hpp"

namespace adeqvaet {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& dst) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            dst = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

    void read_size(const char* key, std::size_t& dst) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(where_ + "." + key + " must be a non-negative integer");
        dst = v.get<std::size_t>();
    }

    bool has(const char* key) const { return j_.contains(key); }

    Section sub(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, where_ + "." + key);
    }

    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key " + where_ + "." + key);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

const char* kind_name(ade::ParamKind k) {
    switch (k) {
        case ade::ParamKind::continuous: return "continuous";
        case ade::ParamKind::integer: return "integer";
        case ade::ParamKind::log_scaled: return "log";
    }
    return "continuous";
}

ade::ParamKind parse_kind(const std::string& s) {
    if (s == "continuous") return ade::ParamKind::continuous;
    if (s == "integer") return ade::ParamKind::integer;
    if (s == "log") return ade::ParamKind::log_scaled;
    throw ConfigError("unknown search dimension kind '" + s + "'");
}

const std::set<std::string>& tunable_names() {
    static const std::set<std::string> names = {"classifier.lr",        "classifier.weight_decay",
                                                "classifier.n_layers",  "classifier.n_heads",
                                                "classifier.ff_hidden", "classifier.batch_size"};
    return names;
}

std::size_t as_count(double v) { return static_cast<std::size_t>(std::max(1.0, std::round(v))); }

}  // namespace

ade::SearchSpace default_search_space() {
    return {{{"classifier.lr", 1e-4, 1e-1, ade::ParamKind::log_scaled},
             {"classifier.weight_decay", 1e-6, 1e-1, ade::ParamKind::log_scaled},
             {"classifier.n_layers", 1, 4, ade::ParamKind::integer}}};
}

void apply_theta(eval::PipelineConfig& p, const ade::SearchSpace& space, const std::vector<double>& theta) {
    if (theta.size() != space.size()) throw DimensionMismatch("theta does not match the search space");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const auto& name = space.dims[i].name;
        const double v = theta[i];
        if (name == "classifier.lr")
            p.classifier_train.lr = v;
        else if (name == "classifier.weight_decay")
            p.classifier_train.weight_decay = v;
        else if (name == "classifier.n_layers")
            p.classifier.n_layers = as_count(v);
        else if (name == "classifier.n_heads")
            p.classifier.n_heads = as_count(v);
        else if (name == "classifier.ff_hidden")
            p.classifier.ff_hidden = as_count(v);
        else if (name == "classifier.batch_size")
            p.classifier_train.batch_size = as_count(v);
        else
            throw ConfigError("search dimension '" + name + "' is not tunable");
    }
}

void apply_theta_file(eval::PipelineConfig& pipeline, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read tuned theta file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("tuned theta file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    ade::SearchSpace space;
    std::vector<double> theta;
    for (const auto& [name, v] : j.at("theta").items()) {
        space.dims.push_back({name, 0.0, 1.0, ade::ParamKind::continuous});
        theta.push_back(v.get<double>());
    }
    apply_theta(pipeline, space, theta);
}

void RunConfig::validate() const {
    if (data.empty()) throw ConfigError("no data path given");
    if (features && features->empty()) throw ConfigError("features list is empty");
    if (tp < 1 || tp > 99) throw ConfigError("tp must be in 1..99");
    if (tps.empty()) throw ConfigError("tps must not be empty");
    for (int t : tps)
        if (t < 1 || t > 99) throw ConfigError("every entry of tps must be in 1..99");
    const auto& pl = pipeline;
    if (pl.qvae_train.epochs == 0) throw ConfigError("qvae.epochs must be >= 1");
    if (pl.classifier_train.epochs == 0) throw ConfigError("classifier.epochs must be >= 1");
    if (pl.qvae_train.batch_size == 0 || pl.classifier_train.batch_size == 0)
        throw ConfigError("batch sizes must be >= 1");
    if (!(pl.qvae_train.lr > 0.0) || !(pl.classifier_train.lr > 0.0)) throw ConfigError("learning rates must be > 0");
    if (pl.qvae_train.weight_decay < 0.0 || pl.classifier_train.weight_decay < 0.0)
        throw ConfigError("weight decay must be >= 0");
    for (auto c : pl.classifier_train.checkpoints)
        if (c == 0) throw ConfigError("checkpoint epochs are 1-based");
    if (tune.inner_tp < 1 || tune.inner_tp > 99) throw ConfigError("tune.inner_tp must be in 1..99");
    if (tune.classifier_epochs == 0) throw ConfigError("tune.classifier_epochs must be >= 1");
    try {
        pl.preprocess.validate();
        pl.qvae.validate();
        pl.classifier.validate();
        tune.ade.validate();
        tune.space.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    for (const auto& d : tune.space.dims)
        if (!tunable_names().count(d.name)) throw ConfigError("search dimension '" + d.name + "' is not tunable");
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.pipeline.classifier_train.checkpoints = {100, 200, 300, 400, 500};
    cfg.tune.space = default_search_space();

    Section root(j, "config");
    int version = 0;
    root.read("version", version);
    if (version != kConfigVersion)
        throw ConfigError("config version must be " + std::to_string(kConfigVersion));

    std::string data, out, tuned;
    root.read("data", data);
    cfg.data = data;
    if (root.has("out")) {
        root.read("out", out);
        cfg.out = out;
    }
    if (root.has("tuned_theta")) {
        root.read("tuned_theta", tuned);
        cfg.tuned_theta = tuned;
    }
    root.read("seed", cfg.seed);
    root.read_size("threads", cfg.threads);
    root.read("tp", cfg.tp);
    root.read("tps", cfg.tps);

    {
        auto s = root.sub("schema");
        if (s.has("features")) {
            std::vector<std::string> f;
            s.read("features", f);
            cfg.features = f;
        }
        s.read("label", cfg.schema.label_name);
        s.read("positive_token", cfg.schema.positive_token);
        s.read("negative_token", cfg.schema.negative_token);
        s.read("missing_token", cfg.schema.missing_token);
        s.finish();
    }
    {
        auto s = root.sub("preprocess");
        s.read("winsor_k", cfg.pipeline.preprocess.winsor_k);
        s.read_size("smote_k", cfg.pipeline.preprocess.smote_k);
        s.read("target_ratio", cfg.pipeline.preprocess.target_ratio);
        std::string impute = "median";
        s.read("impute", impute);
        if (impute != "median") throw ConfigError("preprocess.impute supports only \"median\"");
        s.finish();
    }
    {
        auto s = root.sub("qvae");
        auto& q = cfg.pipeline.qvae;
        auto& t = cfg.pipeline.qvae_train;
        s.read_size("n_qubits", q.n_qubits);
        s.read_size("n_layers", q.n_layers);
        s.read("encoding_scale", q.encoding_scale);
        s.read("beta", q.beta);
        s.read_size("hidden", q.hidden);
        s.read_size("epochs", t.epochs);
        s.read_size("batch_size", t.batch_size);
        s.read("lr", t.lr);
        s.read("weight_decay", t.weight_decay);
        s.finish();
    }
    {
        auto s = root.sub("classifier");
        auto& c = cfg.pipeline.classifier;
        auto& t = cfg.pipeline.classifier_train;
        s.read_size("d_model", c.d_model);
        s.read_size("n_heads", c.n_heads);
        s.read_size("n_layers", c.n_layers);
        s.read_size("ff_hidden", c.ff_hidden);
        s.read("layer_norm_eps", c.layer_norm_eps);
        s.read_size("epochs", t.epochs);
        s.read_size("batch_size", t.batch_size);
        s.read("lr", t.lr);
        s.read("weight_decay", t.weight_decay);
        s.read("checkpoints", t.checkpoints);
        s.finish();
    }
    {
        auto s = root.sub("tune");
        auto& a = cfg.tune.ade;
        s.read_size("pop_size", a.pop_size);
        s.read_size("max_generations", a.max_generations);
        s.read_size("patience", a.patience);
        s.read("c", a.c);
        std::string crossover = "binomial";
        s.read("crossover", crossover);
        if (crossover == "binomial")
            a.crossover = ade::CrossoverMode::binomial;
        else if (crossover == "whole_vector")
            a.crossover = ade::CrossoverMode::whole_vector;
        else
            throw ConfigError("tune.crossover must be \"binomial\" or \"whole_vector\"");
        if (s.has("fixed_F") != s.has("fixed_CR")) throw ConfigError("tune.fixed_F and tune.fixed_CR go together");
        if (s.has("fixed_F")) {
            ade::ControlParams fixed;
            s.read("fixed_F", fixed.F);
            s.read("fixed_CR", fixed.CR);
            a.fixed_control = fixed;
        }
        s.read("inner_tp", cfg.tune.inner_tp);
        s.read_size("classifier_epochs", cfg.tune.classifier_epochs);
        if (s.has("space")) {
            const auto& arr = s.raw("space");
            if (!arr.is_array()) throw ConfigError("tune.space must be an array");
            cfg.tune.space.dims.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Section d(arr[i], "tune.space[" + std::to_string(i) + "]");
                ade::Dimension dim;
                std::string kind = "continuous";
                d.read("name", dim.name);
                d.read("lower", dim.lower);
                d.read("upper", dim.upper);
                d.read("kind", kind);
                dim.kind = parse_kind(kind);
                d.finish();
                cfg.tune.space.dims.push_back(dim);
            }
        }
        s.finish();
    }
    root.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const RunConfig& cfg) {
    const auto& p = cfg.pipeline;
    ordered_json j;
    j["version"] = kConfigVersion;
    j["data"] = cfg.data.generic_string();
    j["seed"] = cfg.seed;
    j["tp"] = cfg.tp;
    j["tps"] = cfg.tps;
    if (cfg.tuned_theta) j["tuned_theta"] = cfg.tuned_theta->generic_string();
    j["schema"] = {{"label", cfg.schema.label_name},
                   {"positive_token", cfg.schema.positive_token},
                   {"negative_token", cfg.schema.negative_token},
                   {"missing_token", cfg.schema.missing_token}};
    if (cfg.features) j["schema"]["features"] = *cfg.features;
    j["preprocess"] = {{"winsor_k", p.preprocess.winsor_k},
                       {"smote_k", p.preprocess.smote_k},
                       {"target_ratio", p.preprocess.target_ratio},
                       {"impute", "median"}};
    j["qvae"] = {{"n_qubits", p.qvae.n_qubits},   {"n_layers", p.qvae.n_layers},
                 {"encoding_scale", p.qvae.encoding_scale}, {"beta", p.qvae.beta},
                 {"hidden", p.qvae.hidden},       {"epochs", p.qvae_train.epochs},
                 {"batch_size", p.qvae_train.batch_size}, {"lr", p.qvae_train.lr},
                 {"weight_decay", p.qvae_train.weight_decay}};
    j["classifier"] = {{"d_model", p.classifier.d_model},
                       {"n_heads", p.classifier.n_heads},
                       {"n_layers", p.classifier.n_layers},
                       {"ff_hidden", p.classifier.ff_hidden},
                       {"layer_norm_eps", p.classifier.layer_norm_eps},
                       {"epochs", p.classifier_train.epochs},
                       {"batch_size", p.classifier_train.batch_size},
                       {"lr", p.classifier_train.lr},
                       {"weight_decay", p.classifier_train.weight_decay},
                       {"checkpoints", p.classifier_train.checkpoints}};
    const auto& a = cfg.tune.ade;
    ordered_json space = ordered_json::array();
    for (const auto& d : cfg.tune.space.dims)
        space.push_back({{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}, {"kind", kind_name(d.kind)}});
    j["tune"] = {{"pop_size", a.pop_size},
                 {"max_generations", a.max_generations},
                 {"patience", a.patience},
                 {"c", a.c},
                 {"crossover", a.crossover == ade::CrossoverMode::binomial ? "binomial" : "whole_vector"},
                 {"inner_tp", cfg.tune.inner_tp},
                 {"classifier_epochs", cfg.tune.classifier_epochs},
                 {"space", space}};
    if (a.fixed_control) {
        j["tune"]["fixed_F"] = a.fixed_control->F;
        j["tune"]["fixed_CR"] = a.fixed_control->CR;
    }
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    return buf;
}

}  // namespace adeqvaet
