#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diffkg/rng.hpp"
#include "diffkg/sparse.hpp"

namespace diffkg {

/// Bipartite user-item interaction store with both CSR directions and the
/// dense-id maps produced at load time. Immutable after construction.
struct InteractionGraph {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // dense ids, sorted, unique

    std::vector<std::uint32_t> user_ptr, user_items;
    std::vector<std::uint32_t> item_ptr, item_users;

    std::vector<std::int64_t> user_orig, item_orig;  // dense id -> original id

    std::size_t user_degree(std::uint32_t u) const { return user_ptr[u + 1] - user_ptr[u]; }
    std::size_t item_degree(std::uint32_t i) const { return item_ptr[i + 1] - item_ptr[i]; }
    std::span<const std::uint32_t> items_of(std::uint32_t u) const {
        return {user_items.data() + user_ptr[u], user_degree(u)};
    }
    std::span<const std::uint32_t> users_of(std::uint32_t i) const {
        return {item_users.data() + item_ptr[i], item_degree(i)};
    }

    /// Dedup + densify raw (user, item) pairs; dense ids follow ascending
    /// original ids.
    static InteractionGraph from_pairs(std::vector<std::pair<std::int64_t, std::int64_t>> raw);
};

struct Triplet {
    std::uint32_t head, rel, tail;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Triplet store plus the per-item views the rest of the engine consumes:
/// binary adjacency rows z_i over entities (sparse) and relation-labelled
/// neighbor lists. Items occupy entity ids [0, n_items).
struct KnowledgeGraph {
    std::size_t n_items = 0;
    std::size_t n_entities = 0;
    std::size_t n_relations = 0;
    std::vector<Triplet> triplets;  // sorted, unique

    // z_i rows: sorted entity ids linked to each item
    std::vector<std::uint32_t> row_ptr;
    std::vector<std::uint32_t> row_entities;

    // neighbor lists: (entity, relation) pairs, unique, sorted
    std::vector<std::uint32_t> nbr_ptr;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> nbrs;

    std::uint32_t most_frequent_relation = 0;

    std::span<const std::uint32_t> row(std::uint32_t item) const {
        return {row_entities.data() + row_ptr[item], row_ptr[item + 1] - row_ptr[item]};
    }
    std::span<const std::pair<std::uint32_t, std::uint32_t>> neighbors(std::uint32_t item) const {
        return {nbrs.data() + nbr_ptr[item], nbr_ptr[item + 1] - nbr_ptr[item]};
    }
    bool has_edge(std::uint32_t item, std::uint32_t entity) const;
    /// Lowest relation id linking (item, entity); most_frequent_relation if none.
    std::uint32_t relation_for(std::uint32_t item, std::uint32_t entity) const;

    static KnowledgeGraph build(std::vector<Triplet> triplets, std::size_t n_items);
};

/// Per-user train/test holdout; users with a single interaction keep it in
/// train. Item ids are the dense ids of the source graph.
struct DatasetSplit {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::vector<std::vector<std::uint32_t>> train;  // sorted per user
    std::vector<std::vector<std::uint32_t>> test;   // sorted per user
    std::uint64_t seed = 0;

    std::size_t train_edge_count() const;
    bool in_train(std::uint32_t u, std::uint32_t i) const;
};

struct BprTriple {
    std::uint32_t user, pos, neg;
};

InteractionGraph load_interactions(const std::string& path);

/// Low-level "user item" pair reader; ids returned verbatim.
std::vector<std::pair<std::int64_t, std::int64_t>> read_pair_file(const std::string& path);

/// Low-level triplet file reader ("head relation tail" per line), no
/// validation beyond syntax. Used by ingest before id remapping.
std::vector<std::array<std::int64_t, 3>> read_triplet_file(const std::string& path);

KnowledgeGraph load_triplets(const std::string& path, std::size_t n_items);

InteractionGraph k_core_filter(const InteractionGraph& g, std::size_t k);

DatasetSplit split(const InteractionGraph& g, double test_ratio, std::uint64_t seed);

/// Symmetric-normalized train adjacency: entry (u,i) = 1/sqrt(|N_u||N_i|).
SpMatPtr build_norm_adjacency(const DatasetSplit& s);

/// Binary train interaction matrix A (|U| x |I|).
SpMatPtr build_interaction_matrix(const DatasetSplit& s);

/// (u, i, j) triples: i from u's train items, j uniform over items u has not
/// interacted with. Users interacting with every item are skipped with a
/// warning on stderr.
std::vector<BprTriple> sample_bpr_triples(const DatasetSplit& s, std::size_t batch_size, Rng& rng);

// Plain-text writers used by the CLI (formats documented in the README).
void write_interactions(const std::string& path,
                        const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);
void write_triplets(const std::string& path, const std::vector<Triplet>& triplets);
void write_id_map(const std::string& path, const std::vector<std::int64_t>& orig_of_dense);

}  // namespace diffkg
