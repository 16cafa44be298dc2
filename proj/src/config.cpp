#include "diffkg/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "diffkg/errors.hpp"

namespace diffkg {

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size() || x < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(x);
    } catch (...) {
        throw UsageError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

#define SIZE_KEY(name, field, desc)                                                    \
    ConfigKey {                                                                        \
        name, "int", desc,                                                             \
            [](RunConfig& c, const std::string& v) { c.field = parse_size(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.field); }                 \
    }
#define REAL_KEY(name, field, desc)                                                            \
    ConfigKey {                                                                                \
        name, "real", desc,                                                                    \
            [](RunConfig& c, const std::string& v) {                                           \
                c.field = static_cast<decltype(c.field)>(parse_real(name, v));                 \
            },                                                                                 \
            [](const RunConfig& c) { return fmt_real(static_cast<double>(c.field)); }          \
    }
#define BOOL_KEY(name, field, desc)                                                    \
    ConfigKey {                                                                        \
        name, "bool", desc,                                                            \
            [](RunConfig& c, const std::string& v) { c.field = parse_bool(name, v); }, \
            [](const RunConfig& c) { return c.field ? "true" : "false"; }              \
    }
#define STR_KEY(name, field, desc)                                              \
    ConfigKey {                                                                 \
        name, "string", desc,                                                   \
            [](RunConfig& c, const std::string& v) { c.field = v; },            \
            [](const RunConfig& c) { return c.field; }                          \
    }

std::vector<ConfigKey> build_keys() {
    return {
        REAL_KEY("lambda0", hp.lambda0, "CKGC weight inside the diffusion loss, in [0,1]"),
        REAL_KEY("lambda1", hp.lambda1, "contrastive loss weight"),
        REAL_KEY("lambda2", hp.lambda2, "L2 regularization weight"),
        REAL_KEY("tau", hp.tau, "contrastive softmax temperature"),
        SIZE_KEY("k", hp.rebuild_k, "entities kept per item when rebuilding the denoised KG"),
        SIZE_KEY("d", hp.d, "embedding dimension"),
        SIZE_KEY("layers", hp.cf_layers, "graph propagation layers"),
        SIZE_KEY("agg_depth", hp.agg_depth, "knowledge aggregation layers"),
        SIZE_KEY("T", hp.T, "diffusion steps"),
        SIZE_KEY("T_prime", hp.T_prime, "forward corruption steps before reverse inference"),
        REAL_KEY("s", hp.s, "noise schedule scale, in (0,1]"),
        REAL_KEY("alpha_low", hp.alpha_low, "noise schedule lower bound"),
        REAL_KEY("alpha_up", hp.alpha_up, "noise schedule upper bound"),
        REAL_KEY("rho_kg", hp.rho_kg, "KG edge dropout rate for the contrastive view"),
        REAL_KEY("rho_out", hp.rho_out, "aggregator output dropout rate"),
        REAL_KEY("leaky_slope", hp.leaky_slope, "LeakyReLU negative slope"),
        REAL_KEY("lr_rec", hp.lr_rec, "learning rate, recommendation parameters"),
        REAL_KEY("lr_diff", hp.lr_diff, "learning rate, denoiser parameters"),
        SIZE_KEY("batch_rec", hp.batch_rec, "BPR batch size"),
        SIZE_KEY("batch_diff", hp.batch_diff, "diffusion row batch size"),
        SIZE_KEY("epochs", hp.epochs, "training epochs"),
        SIZE_KEY("hidden", hp.denoiser_hidden, "denoiser hidden width"),
        SIZE_KEY("step_dim", hp.step_dim, "denoiser step embedding dimension"),
        SIZE_KEY("N", hp.metric_n, "metric cutoff for Recall@N / NDCG@N"),
        SIZE_KEY("eval_every", hp.eval_every, "evaluate every this many epochs"),
        SIZE_KEY("seed", hp.seed, "random seed"),
        BOOL_KEY("disable_cl", hp.disable_cl, "ablation: drop the contrastive term"),
        BOOL_KEY("disable_dm", hp.disable_dm, "ablation: skip diffusion, use the raw KG"),
        BOOL_KEY("disable_ckgc", hp.disable_ckgc, "ablation: drop the CKGC term"),
        REAL_KEY("test_ratio", test_ratio, "per-user holdout fraction"),
        SIZE_KEY("k_core", k_core, "k-core threshold applied by ingest"),
        STR_KEY("interactions", interactions, "raw interactions file (user item per line)"),
        STR_KEY("kg", kg, "knowledge graph triplet file (head relation tail per line)"),
        STR_KEY("train", train, "pre-split train interactions file"),
        STR_KEY("test", test, "pre-split test interactions file"),
        STR_KEY("out", out, "output directory"),
        STR_KEY("checkpoint", checkpoint, "checkpoint path to load"),
        STR_KEY("users", users, "comma-separated user ids for recommend"),
        STR_KEY("synth_kind", synth_kind, "synthetic dataset to write: planted, cf, or both"),
    };
}

#undef SIZE_KEY
#undef REAL_KEY
#undef BOOL_KEY
#undef STR_KEY

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = build_keys();
    return keys;
}

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : config_keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown config key '" + key + "'");
}

namespace {

void apply_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ": line " + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        apply_kv(cfg, key, value);
    }
}

void apply_env(RunConfig& cfg) {
    for (const auto& k : config_keys()) {
        std::string var = "DIFFKG_" + k.name;
        std::transform(var.begin(), var.end(), var.begin(), ::toupper);
        if (const char* v = std::getenv(var.c_str())) k.set(cfg, v);
    }
}

}  // namespace

RunConfig resolve_config(const std::optional<std::string>& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (file) apply_file(cfg, *file);
    apply_env(cfg);
    for (const auto& [k, v] : overrides) apply_kv(cfg, k, v);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    cfg.hp.validate();
    if (!(cfg.test_ratio > 0 && cfg.test_ratio < 1)) {
        throw UsageError("invalid test_ratio: must be in (0,1)");
    }
    if (cfg.k_core < 1) throw UsageError("invalid k_core: must be >= 1");
    if (cfg.synth_kind != "planted" && cfg.synth_kind != "cf" && cfg.synth_kind != "both") {
        throw UsageError("invalid synth_kind: expected planted, cf, or both");
    }
}

std::string render_config(const RunConfig& cfg) {
    std::ostringstream os;
    for (const auto& k : config_keys()) os << k.name << "=" << k.get(cfg) << "\n";
    return os.str();
}

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << render_config(cfg);
}

}  // namespace diffkg
