#pragma once

#include "diffkg/cf_encoder.hpp"
#include "diffkg/kg_aggregator.hpp"

namespace diffkg {

/// Encodings of the two knowledge-enhanced graph views: view 1 from the
/// edge-dropout view of the raw KG, view 2 from the denoised KG. The CF
/// propagation graph is the same for both.
struct ViewPair {
    TensorPtr user1, item1;
    TensorPtr user2, item2;
    real tau = real(1);
};

ViewPair build_views(const KgView& dropout_view, const KgView& denoised_view,
                     const TensorPtr& user_emb, const TensorPtr& item_emb,
                     const RelationAttentionParams& p, const SpMatPtr& norm_adj,
                     std::size_t cf_layers, real tau, Rng& rng, bool training);

/// InfoNCE over a node set: rows of `anchor` against rows of `candidates`,
/// positives on the diagonal, cosine similarity at temperature tau. Returns
/// the sum over nodes of -log softmax probabilities.
TensorPtr infonce(const TensorPtr& anchor, const TensorPtr& candidates, real tau);

}  // namespace diffkg
