#pragma once

#include <cstdint>
#include <vector>

#include "diffkg/graph_store.hpp"
#include "diffkg/ops.hpp"

namespace diffkg {

/// Flattened item-entity edge list of (a view of) a knowledge graph.
/// Aggregation runs over these parallel arrays; per-item grouping is done
/// with segment ops keyed by item_of_edge.
struct KgView {
    std::size_t n_items = 0;
    std::size_t n_entities = 0;
    std::vector<std::uint32_t> item_of_edge;
    std::vector<std::uint32_t> entity_of_edge;
    std::vector<std::uint32_t> rel_of_edge;

    std::size_t edge_count() const { return item_of_edge.size(); }

    static KgView full(const KnowledgeGraph& kg);
};

/// Keep each triplet independently with probability 1-rho, then flatten.
/// Deterministic under the seed.
KgView kg_dropout(const KnowledgeGraph& kg, real rho_kg, std::uint64_t seed);

struct RelationAttentionParams {
    TensorPtr W;        // [d, 2d]
    TensorPtr rel_emb;  // [n_relations, d]
    TensorPtr ent_emb;  // [n_entities, d]
    real rho_kg = real(0.5);
    real rho_out = real(0.1);
    real leaky_slope = real(0.2);
    std::size_t depth = 1;

    std::size_t dim() const { return W->rows(); }
};

RelationAttentionParams make_attention_params(std::size_t n_relations, std::size_t n_entities,
                                              std::size_t d, Rng& rng);

/// Per-edge attention weights alpha(e, r, i): softmax over each item's edges
/// of LeakyReLU(r^T W [x_e || x_i]). Returns [edge_count, 1].
TensorPtr edge_attention(const KgView& view, const TensorPtr& item_emb,
                         const RelationAttentionParams& p);

/// One aggregation layer: Drop(Norm(x_i + sum_e alpha * x_e)). Items with no
/// edges pass through Drop(Norm(x_i)). Output dropout only when training.
TensorPtr aggregate_once(const KgView& view, const TensorPtr& item_emb,
                         const RelationAttentionParams& p, Rng& rng, bool training);

/// `depth` stacked aggregation layers (attention recomputed per layer).
TensorPtr aggregate(const KgView& view, const TensorPtr& item_emb,
                    const RelationAttentionParams& p, Rng& rng, bool training);

}  // namespace diffkg
