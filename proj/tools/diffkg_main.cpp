#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diffkg/config.hpp"
#include "diffkg/errors.hpp"
#include "diffkg/evaluator.hpp"
#include "diffkg/synth.hpp"
#include "diffkg/trainer.hpp"

namespace fs = std::filesystem;
using namespace diffkg;

namespace {

constexpr const char* kUsage = R"(usage: diffkg <command> [--config FILE] [--key value | --key=value ...]

commands:
  synth      write the synthetic datasets (planted KG + two-community CF)
  ingest     load raw interactions (+ KG), apply k-core, split, remap ids
  train      run the full training loop, write metrics CSV and checkpoint
  gen-kg     export the denoised KG as a triplet file (needs a checkpoint)
  eval       compute Recall@N / NDCG@N from a checkpoint
  recommend  print top-N items for the given users (needs a checkpoint)
  help       show this text and the config reference

Boolean flags take --key, --key=false, or --key false. Any key can also be
set via the environment as DIFFKG_<KEY> (upper-cased); precedence is
defaults < config file < environment < command line.

exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure
)";

void print_config_reference() {
    std::printf("config keys (key = default  description):\n");
    RunConfig defaults;
    for (const auto& k : config_keys()) {
        std::printf("  %-12s = %-18s %s\n", k.name.c_str(), k.get(defaults).c_str(),
                    k.description.c_str());
    }
}

struct Cli {
    std::string command;
    std::optional<std::string> config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

bool key_is_bool(const std::string& key) {
    for (const auto& k : config_keys()) {
        if (k.name == key) return k.type == "bool";
    }
    return false;
}

Cli parse_cli(int argc, char** argv) {
    if (argc < 2) throw UsageError("missing command; run `diffkg help`");
    Cli cli;
    cli.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
        arg = arg.substr(2);
        std::string key, value;
        auto eq = arg.find('=');
        if (eq != std::string::npos) {
            key = arg.substr(0, eq);
            value = arg.substr(eq + 1);
        } else {
            key = arg;
            bool next_is_value = i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0;
            if (key != "config" && key_is_bool(key) && !next_is_value) {
                value = "true";  // bare boolean flag
            } else {
                if (i + 1 >= argc) throw UsageError("flag --" + key + " needs a value");
                value = argv[++i];
            }
        }
        if (key == "config") {
            cli.config_file = value;
        } else {
            cli.overrides.emplace_back(key, value);
        }
    }
    return cli;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw DataError("cannot create output directory " + cfg.out);
}

/// Build the split either from pre-split train/test files (ingest output,
/// ids taken verbatim) or from a raw interactions file with an internal
/// seeded split.
DatasetSplit load_split(const RunConfig& cfg) {
    if (!cfg.train.empty()) {
        if (cfg.test.empty()) throw UsageError("--train given without --test");
        auto tr = read_pair_file(cfg.train);
        auto te = read_pair_file(cfg.test);
        if (tr.empty()) throw DataError(cfg.train + ": no interactions found");
        DatasetSplit s;
        for (auto& [u, i] : tr) {
            s.n_users = std::max<std::size_t>(s.n_users, std::size_t(u) + 1);
            s.n_items = std::max<std::size_t>(s.n_items, std::size_t(i) + 1);
        }
        for (auto& [u, i] : te) {
            s.n_users = std::max<std::size_t>(s.n_users, std::size_t(u) + 1);
            s.n_items = std::max<std::size_t>(s.n_items, std::size_t(i) + 1);
        }
        s.train.assign(s.n_users, {});
        s.test.assign(s.n_users, {});
        for (auto& [u, i] : tr) s.train[u].push_back(static_cast<std::uint32_t>(i));
        for (auto& [u, i] : te) s.test[u].push_back(static_cast<std::uint32_t>(i));
        for (auto& v : s.train) std::sort(v.begin(), v.end());
        for (auto& v : s.test) std::sort(v.begin(), v.end());
        s.seed = cfg.hp.seed;
        return s;
    }
    if (cfg.interactions.empty()) {
        throw UsageError("need --interactions (raw) or --train/--test (pre-split)");
    }
    auto g = load_interactions(cfg.interactions);
    return split(g, cfg.test_ratio, cfg.hp.seed);
}

KnowledgeGraph load_kg_for(const RunConfig& cfg, std::size_t n_items) {
    if (cfg.kg.empty()) throw UsageError("need --kg <triplet file>");
    return load_triplets(cfg.kg, n_items);
}

int cmd_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    if (cfg.synth_kind == "planted" || cfg.synth_kind == "both") {
        write_planted_dataset(cfg.out, cfg.hp.seed);
        std::printf("wrote %s/planted (seed %llu)\n", cfg.out.c_str(),
                    static_cast<unsigned long long>(cfg.hp.seed));
    }
    if (cfg.synth_kind == "cf" || cfg.synth_kind == "both") {
        write_cf_dataset(cfg.out, cfg.hp.seed);
        std::printf("wrote %s/cf (seed %llu)\n", cfg.out.c_str(),
                    static_cast<unsigned long long>(cfg.hp.seed));
    }
    return 0;
}

int cmd_ingest(const RunConfig& cfg) {
    if (cfg.interactions.empty()) throw UsageError("ingest needs --interactions");
    ensure_out_dir(cfg);
    auto g = load_interactions(cfg.interactions);
    auto filtered = k_core_filter(g, cfg.k_core);
    auto s = split(filtered, cfg.test_ratio, cfg.hp.seed);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> train_edges, test_edges;
    for (std::uint32_t u = 0; u < s.n_users; ++u) {
        for (auto i : s.train[u]) train_edges.emplace_back(u, i);
        for (auto i : s.test[u]) test_edges.emplace_back(u, i);
    }
    write_interactions(cfg.out + "/train.txt", train_edges);
    write_interactions(cfg.out + "/test.txt", test_edges);
    write_id_map(cfg.out + "/user_map.txt", filtered.user_orig);
    write_id_map(cfg.out + "/item_map.txt", filtered.item_orig);

    if (!cfg.kg.empty()) {
        // Remap KG node ids: surviving items take their dense ids, all other
        // nodes are packed after the item range in ascending original order.
        auto raw = read_triplet_file(cfg.kg);
        std::map<std::int64_t, std::uint32_t> item_dense;
        for (std::uint32_t i = 0; i < filtered.n_items; ++i) item_dense[filtered.item_orig[i]] = i;
        std::set<std::int64_t> other_nodes;
        std::set<std::int64_t> rels;
        for (auto& [h, r, t] : raw) {
            if (h < 0 || r < 0 || t < 0) {
                throw DataError(cfg.kg + ": triplet (" + std::to_string(h) + ", " +
                                std::to_string(r) + ", " + std::to_string(t) + ") has a negative id");
            }
            if (!item_dense.count(h)) other_nodes.insert(h);
            if (!item_dense.count(t)) other_nodes.insert(t);
            rels.insert(r);
        }
        std::map<std::int64_t, std::uint32_t> node_dense = item_dense;
        std::uint32_t next = static_cast<std::uint32_t>(filtered.n_items);
        std::vector<std::int64_t> entity_orig;
        for (auto n : other_nodes) {
            node_dense[n] = next++;
            entity_orig.push_back(n);
        }
        std::map<std::int64_t, std::uint32_t> rel_dense;
        std::vector<std::int64_t> rel_orig;
        for (auto r : rels) {
            rel_dense[r] = static_cast<std::uint32_t>(rel_orig.size());
            rel_orig.push_back(r);
        }
        std::vector<Triplet> mapped;
        mapped.reserve(raw.size());
        for (auto& [h, r, t] : raw) mapped.push_back({node_dense[h], rel_dense[r], node_dense[t]});
        write_triplets(cfg.out + "/kg.txt", mapped);
        write_id_map(cfg.out + "/entity_map.txt", entity_orig);
        write_id_map(cfg.out + "/relation_map.txt", rel_orig);
    }
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    std::printf("ingested %zu users, %zu items, %zu train / %zu test interactions\n",
                filtered.n_users, filtered.n_items, train_edges.size(), test_edges.size());
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    auto s = load_split(cfg);
    auto kg = load_kg_for(cfg, s.n_items);
    Trainer trainer(std::move(s), std::move(kg), cfg.hp);
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    auto res = trainer.run(cfg.hp.epochs, cfg.out + "/metrics.csv");
    trainer.save_checkpoint(cfg.out + "/model.ckpt");
    std::printf("recall@%zu=%.6f ndcg@%zu=%.6f (%zu users)\n", cfg.hp.metric_n, res.recall,
                cfg.hp.metric_n, res.ndcg, res.users_evaluated);
    std::printf("wrote %s/metrics.csv and %s/model.ckpt\n", cfg.out.c_str(), cfg.out.c_str());
    return 0;
}

Trainer trainer_from_checkpoint(const RunConfig& cfg) {
    if (cfg.checkpoint.empty()) throw UsageError("need --checkpoint");
    auto s = load_split(cfg);
    auto kg = load_kg_for(cfg, s.n_items);
    Trainer trainer(std::move(s), std::move(kg), cfg.hp);
    trainer.load_checkpoint(cfg.checkpoint);
    return trainer;
}

int cmd_eval(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    auto trainer = trainer_from_checkpoint(cfg);
    auto res = trainer.evaluate();
    std::ofstream csv(cfg.out + "/eval.csv");
    csv << "recall@" << cfg.hp.metric_n << ",ndcg@" << cfg.hp.metric_n << ",users\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu\n", res.recall, res.ndcg,
                  res.users_evaluated);
    csv << buf;
    std::printf("recall@%zu=%.6f ndcg@%zu=%.6f (%zu users)\n", cfg.hp.metric_n, res.recall,
                cfg.hp.metric_n, res.ndcg, res.users_evaluated);
    return 0;
}

int cmd_gen_kg(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    auto trainer = trainer_from_checkpoint(cfg);
    write_triplets(cfg.out + "/denoised_kg.txt", trainer.denoised_kg().triplets);
    std::printf("wrote %s/denoised_kg.txt (%zu triplets)\n", cfg.out.c_str(),
                trainer.denoised_kg().triplets.size());
    return 0;
}

int cmd_recommend(const RunConfig& cfg) {
    if (cfg.users.empty()) throw UsageError("recommend needs --users id[,id...]");
    auto trainer = trainer_from_checkpoint(cfg);
    std::vector<std::uint32_t> users;
    std::string token;
    std::istringstream us(cfg.users);
    while (std::getline(us, token, ',')) {
        if (token.empty()) continue;
        std::size_t pos = 0;
        long long id = std::stoll(token, &pos);
        if (pos != token.size() || id < 0) throw UsageError("bad user id '" + token + "'");
        if (static_cast<std::size_t>(id) >= trainer.split().n_users) {
            throw DataError("unknown user id " + token);
        }
        users.push_back(static_cast<std::uint32_t>(id));
    }
    auto [xu, xi] = trainer.final_encodings();
    std::size_t d = xu->cols();
    std::vector<real> scores(trainer.split().n_items);
    for (auto u : users) {
        for (std::uint32_t i = 0; i < scores.size(); ++i) {
            real acc = 0;
            for (std::size_t j = 0; j < d; ++j) acc += xu->at(u, j) * xi->at(i, j);
            scores[i] = acc;
        }
        auto top = rank_items(scores, trainer.split().train[u], cfg.hp.metric_n);
        for (auto i : top) std::printf("%u %u %.6f\n", u, i, double(scores[i]));
    }
    return 0;
}

int run_cli(int argc, char** argv) {
    auto cli = parse_cli(argc, argv);
    if (cli.command == "help" || cli.command == "--help" || cli.command == "-h") {
        std::printf("%s\n", kUsage);
        print_config_reference();
        return 0;
    }
    auto cfg = resolve_config(cli.config_file, cli.overrides);
    validate_config(cfg);
    if (cli.command == "synth") return cmd_synth(cfg);
    if (cli.command == "ingest") return cmd_ingest(cfg);
    if (cli.command == "train") return cmd_train(cfg);
    if (cli.command == "eval") return cmd_eval(cfg);
    if (cli.command == "gen-kg") return cmd_gen_kg(cfg);
    if (cli.command == "recommend") return cmd_recommend(cfg);
    throw UsageError("unknown command '" + cli.command + "'; run `diffkg help`");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
