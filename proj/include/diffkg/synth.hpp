#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffkg/graph_store.hpp"

namespace diffkg {

/// Planted block-structure KG: items come in groups sharing 3 "true"
/// attribute entities; each item additionally links to 2 random noise
/// entities. Attribute entities occupy ids [n_items, n_items + n_entities).
struct PlantedKg {
    KnowledgeGraph kg;
    std::size_t n_items = 0;
    std::size_t n_attr_entities = 0;
    std::vector<std::vector<std::uint32_t>> true_entities;   // per item, sorted
    std::vector<std::vector<std::uint32_t>> noise_entities;  // per item, sorted
};

PlantedKg make_planted_kg(std::uint64_t seed, std::size_t n_items = 20,
                          std::size_t n_attr_entities = 15, std::size_t group_size = 5,
                          std::size_t true_per_item = 3, std::size_t noise_per_item = 2);

/// Two-community collaborative dataset with a community-aligned KG plus
/// topic-irrelevant noise triplets (cross-community links), noise count =
/// round(noise_frac * aligned count). User tastes concentrate on small item
/// clusters nested inside each community, so collaborative filtering has
/// fine-grained structure to learn on top of the community split.
struct SynthCfData {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> interactions;
    std::vector<Triplet> triplets;
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_entities = 0;  // total node id space: items + attributes
};

SynthCfData make_cf_dataset(std::uint64_t seed, std::size_t n_users = 200,
                            std::size_t n_items = 100, std::size_t per_user = 12,
                            std::size_t clusters_per_community = 4,
                            double own_cluster_prob = 0.7, double own_community_prob = 0.95,
                            std::size_t attr_per_community = 8,
                            std::size_t links_per_item = 3, double noise_frac = 0.3);

// File writers for `diffkg synth`: dir/planted/{kg.txt,truth.txt} and
// dir/cf/{interactions.txt,kg.txt}.
void write_planted_dataset(const std::string& dir, std::uint64_t seed);
void write_cf_dataset(const std::string& dir, std::uint64_t seed);
void write_synth_datasets(const std::string& dir, std::uint64_t seed);

}  // namespace diffkg
