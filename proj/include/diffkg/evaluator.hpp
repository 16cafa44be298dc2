#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diffkg/graph_store.hpp"
#include "diffkg/tensor.hpp"

namespace diffkg {

/// |top-N ∩ relevant| / |relevant|. `relevant` must be sorted.
double recall_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   std::size_t n);

/// Binary-relevance NDCG@N with gain 1/log2(pos+1), positions 1-indexed,
/// normalized by the ideal DCG for |relevant| items.
double ndcg_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 std::size_t n);

/// Top-n items by (score desc, id asc), excluding the masked (train) items.
/// `mask` must be sorted.
std::vector<std::uint32_t> rank_items(std::span<const real> scores,
                                      std::span<const std::uint32_t> mask, std::size_t n);

struct EvalResult {
    double recall = 0;
    double ndcg = 0;
    std::size_t users_evaluated = 0;
};

/// Full-rank evaluation: every user is scored against all items, the user's
/// train items are masked out, and Recall@N / NDCG@N are macro-averaged over
/// users with a nonempty test set.
EvalResult evaluate_full_rank(const TensorPtr& user_x, const TensorPtr& item_x,
                              const DatasetSplit& split, std::size_t n);

}  // namespace diffkg
