#include "diffkg/ssl_augment.hpp"

#include <stdexcept>

namespace diffkg {

ViewPair build_views(const KgView& dropout_view, const KgView& denoised_view,
                     const TensorPtr& user_emb, const TensorPtr& item_emb,
                     const RelationAttentionParams& p, const SpMatPtr& norm_adj,
                     std::size_t cf_layers, real tau, Rng& rng, bool training) {
    ViewPair v;
    v.tau = tau;
    auto items1 = aggregate(dropout_view, item_emb, p, rng, training);
    auto [u1, i1] = encode(user_emb, items1, norm_adj, cf_layers);
    v.user1 = u1;
    v.item1 = i1;
    auto items2 = aggregate(denoised_view, item_emb, p, rng, training);
    auto [u2, i2] = encode(user_emb, items2, norm_adj, cf_layers);
    v.user2 = u2;
    v.item2 = i2;
    return v;
}

TensorPtr infonce(const TensorPtr& anchor, const TensorPtr& candidates, real tau) {
    if (tau <= real(0)) {
        throw std::invalid_argument("infonce: tau must be positive, got " + std::to_string(tau));
    }
    if (anchor->shape != candidates->shape) {
        throw std::invalid_argument("infonce: shape mismatch " + anchor->shape_str() + " vs " +
                                    candidates->shape_str());
    }
    auto a = row_l2_normalize(anchor);
    auto b = row_l2_normalize(candidates);
    auto logits = scale(matmul_nt(a, b), real(1) / tau);
    return neg(trace(log_softmax_rows(logits)));
}

}  // namespace diffkg
