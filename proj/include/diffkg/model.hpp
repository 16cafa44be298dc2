#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diffkg/kg_aggregator.hpp"
#include "diffkg/kg_diffusion.hpp"

namespace diffkg {

struct ModelSizes {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_entities = 0;
    std::size_t n_relations = 0;
    std::size_t d = 64;
    std::size_t cf_layers = 2;
    std::size_t agg_depth = 1;
    std::size_t denoiser_hidden = 1024;
    std::size_t step_dim = 10;
    real rho_kg = real(0.5);
    real rho_out = real(0.1);
    real leaky_slope = real(0.2);
};

/// All learnable state: embedding tables + attention on the recommendation
/// side, the denoiser MLP on the diffusion side. The two groups are
/// optimized separately.
struct DiffKgModel {
    ModelSizes sizes;
    TensorPtr user_emb;  // [U, d]
    TensorPtr item_emb;  // [I, d]
    RelationAttentionParams attention;
    Denoiser denoiser;

    std::vector<TensorPtr> rec_params() const;
    std::vector<TensorPtr> diff_params() const;
    std::vector<std::pair<std::string, TensorPtr>> named_params() const;
};

DiffKgModel make_model(const ModelSizes& sizes, Rng& rng);

}  // namespace diffkg
