#include "diffkg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diffkg {

double recall_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                   std::size_t n) {
    if (relevant.empty()) throw std::invalid_argument("recall_at_n: empty relevant set");
    std::size_t hits = 0;
    for (std::size_t p = 0; p < std::min(n, ranked.size()); ++p) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
    }
    return double(hits) / double(relevant.size());
}

double ndcg_at_n(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant,
                 std::size_t n) {
    if (relevant.empty()) throw std::invalid_argument("ndcg_at_n: empty relevant set");
    double dcg = 0;
    for (std::size_t p = 0; p < std::min(n, ranked.size()); ++p) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) {
            dcg += 1.0 / std::log2(double(p) + 2.0);
        }
    }
    double idcg = 0;
    for (std::size_t p = 0; p < std::min(n, relevant.size()); ++p) {
        idcg += 1.0 / std::log2(double(p) + 2.0);
    }
    return dcg / idcg;
}

std::vector<std::uint32_t> rank_items(std::span<const real> scores,
                                      std::span<const std::uint32_t> mask, std::size_t n) {
    std::vector<std::uint32_t> candidates;
    candidates.reserve(scores.size());
    for (std::uint32_t i = 0; i < scores.size(); ++i) {
        if (!std::binary_search(mask.begin(), mask.end(), i)) candidates.push_back(i);
    }
    std::size_t top = std::min(n, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + top, candidates.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    candidates.resize(top);
    return candidates;
}

EvalResult evaluate_full_rank(const TensorPtr& user_x, const TensorPtr& item_x,
                              const DatasetSplit& split, std::size_t n) {
    std::size_t d = user_x->cols();
    if (item_x->cols() != d || user_x->rows() != split.n_users || item_x->rows() != split.n_items) {
        throw std::invalid_argument("evaluate_full_rank: encodings " + user_x->shape_str() + "/" +
                                    item_x->shape_str() + " do not match the split");
    }
    EvalResult res;
    std::vector<real> scores(split.n_items);
    double recall_sum = 0, ndcg_sum = 0;
    for (std::uint32_t u = 0; u < split.n_users; ++u) {
        if (split.test[u].empty()) continue;
        const real* xu = user_x->values.data() + std::size_t(u) * d;
        for (std::uint32_t i = 0; i < split.n_items; ++i) {
            const real* xi = item_x->values.data() + std::size_t(i) * d;
            real s = 0;
            for (std::size_t j = 0; j < d; ++j) s += xu[j] * xi[j];
            scores[i] = s;
        }
        auto top = rank_items(scores, split.train[u], n);
        recall_sum += recall_at_n(top, split.test[u], n);
        ndcg_sum += ndcg_at_n(top, split.test[u], n);
        ++res.users_evaluated;
    }
    if (res.users_evaluated > 0) {
        res.recall = recall_sum / double(res.users_evaluated);
        res.ndcg = ndcg_sum / double(res.users_evaluated);
    }
    return res;
}

}  // namespace diffkg
