#include "diffkg/cf_encoder.hpp"

namespace diffkg {

std::pair<TensorPtr, TensorPtr> propagate_layer(const TensorPtr& user_x, const TensorPtr& item_x,
                                                const SpMatPtr& norm_adj) {
    auto next_users = spmm(norm_adj, item_x);        // A · X_i
    auto next_items = spmm(norm_adj, user_x, true);  // Aᵀ · X_u
    return {next_users, next_items};
}

std::pair<TensorPtr, TensorPtr> encode(const TensorPtr& user_emb, const TensorPtr& item_inputs,
                                       const SpMatPtr& norm_adj, std::size_t layers) {
    TensorPtr xu = user_emb;
    TensorPtr xi = item_inputs;
    TensorPtr sum_u = xu;
    TensorPtr sum_i = xi;
    for (std::size_t l = 0; l < layers; ++l) {
        auto [nu, ni] = propagate_layer(xu, xi, norm_adj);
        xu = nu;
        xi = ni;
        sum_u = add(sum_u, xu);
        sum_i = add(sum_i, xi);
    }
    real inv = real(1) / real(layers + 1);
    return {scale(sum_u, inv), scale(sum_i, inv)};
}

TensorPtr predict_scores(const TensorPtr& user_x, const TensorPtr& item_x) {
    return matmul_nt(user_x, item_x);
}

}  // namespace diffkg
