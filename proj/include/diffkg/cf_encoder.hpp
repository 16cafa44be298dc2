#pragma once

#include <utility>

#include "diffkg/ops.hpp"

namespace diffkg {

/// One propagation layer: each side becomes the degree-normalized sum of its
/// neighbors on the other side. No self-loops, no nonlinearity, no weights.
std::pair<TensorPtr, TensorPtr> propagate_layer(const TensorPtr& user_x, const TensorPtr& item_x,
                                                const SpMatPtr& norm_adj);

/// Run `layers` propagation steps seeded with (user_emb, item_inputs) and
/// return the mean of layers 0..L for each side.
std::pair<TensorPtr, TensorPtr> encode(const TensorPtr& user_emb, const TensorPtr& item_inputs,
                                       const SpMatPtr& norm_adj, std::size_t layers);

/// Inner-product scores, one row per user: [U, d] x [I, d] -> [U, I].
TensorPtr predict_scores(const TensorPtr& user_x, const TensorPtr& item_x);

}  // namespace diffkg
