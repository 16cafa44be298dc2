#include "diffkg/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "diffkg/errors.hpp"
#include "diffkg/rng.hpp"

namespace diffkg {

PlantedKg make_planted_kg(std::uint64_t seed, std::size_t n_items, std::size_t n_attr_entities,
                          std::size_t group_size, std::size_t true_per_item,
                          std::size_t noise_per_item) {
    Rng rng(seed);
    PlantedKg out;
    out.n_items = n_items;
    out.n_attr_entities = n_attr_entities;
    out.true_entities.resize(n_items);
    out.noise_entities.resize(n_items);
    auto entity_id = [&](std::size_t attr) { return static_cast<std::uint32_t>(n_items + attr); };

    std::vector<Triplet> ts;
    for (std::uint32_t i = 0; i < n_items; ++i) {
        std::size_t group = i / group_size;
        std::set<std::uint32_t> truth;
        for (std::size_t j = 0; j < true_per_item; ++j) {
            truth.insert(entity_id((group * true_per_item + j) % n_attr_entities));
        }
        std::set<std::uint32_t> noise;
        while (noise.size() < noise_per_item) {
            auto e = entity_id(rng.below(n_attr_entities));
            if (!truth.count(e)) noise.insert(e);
        }
        for (auto e : truth) ts.push_back({i, 0, e});
        for (auto e : noise) ts.push_back({i, 0, e});
        out.true_entities[i].assign(truth.begin(), truth.end());
        out.noise_entities[i].assign(noise.begin(), noise.end());
    }
    out.kg = KnowledgeGraph::build(std::move(ts), n_items);
    return out;
}

SynthCfData make_cf_dataset(std::uint64_t seed, std::size_t n_users, std::size_t n_items,
                            std::size_t per_user, std::size_t clusters_per_community,
                            double own_cluster_prob, double own_community_prob,
                            std::size_t attr_per_community, std::size_t links_per_item,
                            double noise_frac) {
    if (n_users < 2 || n_items < 2 || clusters_per_community < 1 || attr_per_community < 1 ||
        per_user > n_items || links_per_item > attr_per_community ||
        2 * clusters_per_community > n_items) {
        throw std::invalid_argument("make_cf_dataset: degenerate size parameters");
    }
    Rng rng(seed);
    SynthCfData out;
    out.n_users = n_users;
    out.n_items = n_items;
    out.n_entities = n_items + 2 * attr_per_community;
    std::size_t half_items = n_items / 2;
    std::size_t n_clusters = 2 * clusters_per_community;

    auto community_of_item = [&](std::uint32_t i) { return i < half_items ? 0u : 1u; };
    auto item_in_community = [&](std::uint32_t c) {
        return static_cast<std::uint32_t>(c == 0 ? rng.below(half_items)
                                                 : half_items + rng.below(n_items - half_items));
    };
    // items split contiguously into taste clusters, clusters 0..k-1 in
    // community 0, the rest in community 1
    auto item_in_cluster = [&](std::size_t g) {
        std::size_t lo = g * n_items / n_clusters;
        std::size_t hi = (g + 1) * n_items / n_clusters;
        return static_cast<std::uint32_t>(lo + rng.below(hi - lo));
    };

    std::vector<std::set<std::uint32_t>> per_user_items(n_users);
    for (std::uint32_t u = 0; u < n_users; ++u) {
        std::uint32_t uc = u < n_users / 2 ? 0 : 1;
        std::size_t ug = uc * clusters_per_community + rng.below(clusters_per_community);
        while (per_user_items[u].size() < per_user) {
            std::uint32_t pick;
            if (rng.bernoulli(own_cluster_prob)) {
                pick = item_in_cluster(ug);
            } else if (rng.bernoulli(own_community_prob)) {
                pick = item_in_community(uc);
            } else {
                pick = item_in_community(1 - uc);
            }
            per_user_items[u].insert(pick);
        }
    }
    // keep the item id space dense: every item gets at least one interaction
    std::vector<bool> covered(n_items, false);
    for (const auto& items : per_user_items) {
        for (auto i : items) covered[i] = true;
    }
    for (std::uint32_t i = 0; i < n_items; ++i) {
        if (!covered[i]) {
            std::uint32_t uc = community_of_item(i);
            auto u = static_cast<std::uint32_t>(uc * (n_users / 2) + rng.below(n_users / 2));
            per_user_items[u].insert(i);
        }
    }
    for (std::uint32_t u = 0; u < n_users; ++u) {
        for (auto i : per_user_items[u]) out.interactions.emplace_back(u, i);
    }

    auto attr_entity = [&](std::uint32_t community, std::size_t k) {
        return static_cast<std::uint32_t>(n_items + community * attr_per_community + k);
    };
    std::set<std::pair<std::uint32_t, std::uint32_t>> links;
    std::vector<Triplet> aligned;
    for (std::uint32_t i = 0; i < n_items; ++i) {
        std::uint32_t ic = community_of_item(i);
        std::set<std::size_t> attrs;
        while (attrs.size() < links_per_item) attrs.insert(rng.below(attr_per_community));
        for (auto k : attrs) {
            auto e = attr_entity(ic, k);
            aligned.push_back({i, static_cast<std::uint32_t>(e % 2), e});
            links.insert({i, e});
        }
    }
    std::size_t n_noise = static_cast<std::size_t>(noise_frac * double(aligned.size()) + 0.5);
    std::vector<Triplet> noisy;
    while (noisy.size() < n_noise) {
        auto i = static_cast<std::uint32_t>(rng.below(n_items));
        auto e = attr_entity(1 - community_of_item(i), rng.below(attr_per_community));
        if (links.insert({i, e}).second) {
            noisy.push_back({i, static_cast<std::uint32_t>(e % 2), e});
        }
    }
    out.triplets = std::move(aligned);
    out.triplets.insert(out.triplets.end(), noisy.begin(), noisy.end());
    return out;
}

void write_planted_dataset(const std::string& dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "planted", ec);
    if (ec) throw DataError("cannot create output directory " + dir);
    auto planted = make_planted_kg(seed);
    write_triplets((fs::path(dir) / "planted" / "kg.txt").string(), planted.kg.triplets);
    std::ofstream truth((fs::path(dir) / "planted" / "truth.txt").string());
    for (std::size_t i = 0; i < planted.n_items; ++i) {
        truth << i;
        for (auto e : planted.true_entities[i]) truth << " " << e;
        truth << "\n";
    }
}

void write_cf_dataset(const std::string& dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "cf", ec);
    if (ec) throw DataError("cannot create output directory " + dir);
    auto cf = make_cf_dataset(seed);
    write_interactions((fs::path(dir) / "cf" / "interactions.txt").string(), cf.interactions);
    write_triplets((fs::path(dir) / "cf" / "kg.txt").string(), cf.triplets);
}

void write_synth_datasets(const std::string& dir, std::uint64_t seed) {
    write_planted_dataset(dir, seed);
    write_cf_dataset(dir, seed);
}

}  // namespace diffkg
