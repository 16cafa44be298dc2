#include "diffkg/model.hpp"

#include <cmath>

namespace diffkg {

std::vector<TensorPtr> DiffKgModel::rec_params() const {
    return {user_emb, item_emb, attention.ent_emb, attention.rel_emb, attention.W};
}

std::vector<TensorPtr> DiffKgModel::diff_params() const { return denoiser.params(); }

std::vector<std::pair<std::string, TensorPtr>> DiffKgModel::named_params() const {
    return {
        {"user_emb", user_emb},
        {"item_emb", item_emb},
        {"entity_emb", attention.ent_emb},
        {"relation_emb", attention.rel_emb},
        {"attention_W", attention.W},
        {"denoiser_W1", denoiser.W1},
        {"denoiser_b1", denoiser.b1},
        {"denoiser_W2", denoiser.W2},
        {"denoiser_b2", denoiser.b2},
    };
}

DiffKgModel make_model(const ModelSizes& sizes, Rng& rng) {
    DiffKgModel m;
    m.sizes = sizes;
    real scale = real(1) / std::sqrt(real(sizes.d));
    m.user_emb = Tensor::create({sizes.n_users, sizes.d}, true);
    rng.fill_uniform_sym(m.user_emb->values, scale);
    m.item_emb = Tensor::create({sizes.n_items, sizes.d}, true);
    rng.fill_uniform_sym(m.item_emb->values, scale);
    m.attention = make_attention_params(sizes.n_relations, sizes.n_entities, sizes.d, rng);
    m.attention.rho_kg = sizes.rho_kg;
    m.attention.rho_out = sizes.rho_out;
    m.attention.leaky_slope = sizes.leaky_slope;
    m.attention.depth = sizes.agg_depth;
    m.denoiser = make_denoiser(sizes.n_entities, sizes.denoiser_hidden, sizes.step_dim,
                               sizes.leaky_slope, rng);
    return m;
}

}  // namespace diffkg
