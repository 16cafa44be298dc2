#include "diffkg/kg_aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace diffkg {

namespace {

KgView view_from_triplets(const std::vector<Triplet>& triplets, std::size_t n_items,
                          std::size_t n_entities) {
    // Same undirected incidence rule as KnowledgeGraph::build, deduped by
    // (item, entity, relation).
    std::vector<std::array<std::uint32_t, 3>> edges;
    edges.reserve(triplets.size() * 2);
    for (const auto& t : triplets) {
        if (t.head < n_items) edges.push_back({t.head, t.tail, t.rel});
        if (t.tail < n_items && t.tail != t.head) edges.push_back({t.tail, t.head, t.rel});
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    KgView v;
    v.n_items = n_items;
    v.n_entities = n_entities;
    v.item_of_edge.reserve(edges.size());
    v.entity_of_edge.reserve(edges.size());
    v.rel_of_edge.reserve(edges.size());
    for (const auto& e : edges) {
        v.item_of_edge.push_back(e[0]);
        v.entity_of_edge.push_back(e[1]);
        v.rel_of_edge.push_back(e[2]);
    }
    return v;
}

}  // namespace

KgView KgView::full(const KnowledgeGraph& kg) {
    return view_from_triplets(kg.triplets, kg.n_items, kg.n_entities);
}

KgView kg_dropout(const KnowledgeGraph& kg, real rho_kg, std::uint64_t seed) {
    if (rho_kg < real(0) || rho_kg >= real(1)) {
        throw std::invalid_argument("kg_dropout: rho must be in [0,1), got " + std::to_string(rho_kg));
    }
    if (rho_kg == real(0)) return KgView::full(kg);
    Rng rng(seed);
    std::vector<Triplet> kept;
    kept.reserve(kg.triplets.size());
    for (const auto& t : kg.triplets) {
        if (rng.bernoulli(1.0 - double(rho_kg))) kept.push_back(t);
    }
    return view_from_triplets(kept, kg.n_items, kg.n_entities);
}

RelationAttentionParams make_attention_params(std::size_t n_relations, std::size_t n_entities,
                                              std::size_t d, Rng& rng) {
    RelationAttentionParams p;
    real emb_scale = real(1) / std::sqrt(real(d));
    real w_scale = real(1) / std::sqrt(real(2 * d));
    p.W = Tensor::create({d, 2 * d}, true);
    rng.fill_uniform_sym(p.W->values, w_scale);
    p.rel_emb = Tensor::create({n_relations, d}, true);
    rng.fill_uniform_sym(p.rel_emb->values, emb_scale);
    p.ent_emb = Tensor::create({n_entities, d}, true);
    rng.fill_uniform_sym(p.ent_emb->values, emb_scale);
    return p;
}

TensorPtr edge_attention(const KgView& view, const TensorPtr& item_emb,
                         const RelationAttentionParams& p) {
    auto xe = gather_rows(p.ent_emb, view.entity_of_edge);
    auto xi = gather_rows(item_emb, view.item_of_edge);
    auto r = gather_rows(p.rel_emb, view.rel_of_edge);
    auto proj = matmul_nt(concat_cols(xe, xi), p.W);  // [m, d]
    auto logits = leaky_relu(row_sum(mul(r, proj)), p.leaky_slope);
    return segment_softmax(logits, view.item_of_edge, view.n_items);
}

TensorPtr aggregate_once(const KgView& view, const TensorPtr& item_emb,
                         const RelationAttentionParams& p, Rng& rng, bool training) {
    TensorPtr combined;
    if (view.edge_count() == 0) {
        combined = item_emb;
    } else {
        auto alpha = edge_attention(view, item_emb, p);
        auto xe = gather_rows(p.ent_emb, view.entity_of_edge);
        auto agg = segment_weighted_rowsum(alpha, xe, view.item_of_edge, view.n_items);
        combined = add(item_emb, agg);
    }
    auto normed = row_l2_normalize(combined);
    return training ? dropout(normed, p.rho_out, rng) : normed;
}

TensorPtr aggregate(const KgView& view, const TensorPtr& item_emb,
                    const RelationAttentionParams& p, Rng& rng, bool training) {
    TensorPtr x = item_emb;
    for (std::size_t layer = 0; layer < std::max<std::size_t>(p.depth, 1); ++layer) {
        x = aggregate_once(view, x, p, rng, training);
    }
    return x;
}

}  // namespace diffkg
