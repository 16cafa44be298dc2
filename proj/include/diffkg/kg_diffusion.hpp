#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diffkg/graph_store.hpp"
#include "diffkg/ops.hpp"

namespace diffkg {

/// Linear noise schedule: 1 - abar_t grows linearly from s*alpha_low at t=1
/// to s*alpha_up at t=T. abar_0 is defined as 1.
struct NoiseSchedule {
    std::size_t steps = 0;            // T
    std::size_t inference_steps = 0;  // T', forward corruption before reverse inference
    real s = 0, alpha_low = 0, alpha_up = 0;
    std::vector<real> one_minus_abar;  // [T], index t-1

    real alpha_bar(std::size_t t) const;           // t in 0..T
    real alpha(std::size_t t) const;               // abar_t / abar_{t-1}, t in 1..T
    real beta(std::size_t t) const;                // 1 - alpha(t)
    real posterior_variance(std::size_t t) const;  // beta_t (1-abar_{t-1}) / (1-abar_t)
};

NoiseSchedule build_schedule(std::size_t T, std::size_t T_prime, real s, real alpha_low,
                             real alpha_up);

/// MLP mapping a corrupted adjacency row plus a sinusoidal step embedding
/// back to the clean row. Input and output width equal the entity count.
struct Denoiser {
    std::size_t width = 0;
    std::size_t hidden = 0;
    std::size_t step_dim = 0;
    real leaky_slope = real(0.2);
    TensorPtr W1, b1, W2, b2;

    std::vector<TensorPtr> params() const { return {W1, b1, W2, b2}; }
};

Denoiser make_denoiser(std::size_t width, std::size_t hidden, std::size_t step_dim,
                       real leaky_slope, Rng& rng);

/// Constant [n, dim] sinusoidal embeddings of the given step indices.
TensorPtr step_embedding(const std::vector<std::uint32_t>& ts, std::size_t dim);

TensorPtr predict_x0(const Denoiser& den, const TensorPtr& x_t,
                     const std::vector<std::uint32_t>& ts);

/// One forward corruption step: x_t = sqrt(1-beta_t) x_{t-1} + sqrt(beta_t) eps.
TensorPtr q_step(const TensorPtr& x_prev, std::size_t t, const TensorPtr& eps,
                 const NoiseSchedule& sch);

/// Closed-form corruption from the clean rows, one step index per row:
/// x_t = sqrt(abar_t) x_0 + sqrt(1-abar_t) eps.
TensorPtr q_sample(const TensorPtr& x0, const std::vector<std::uint32_t>& ts, const TensorPtr& eps,
                   const NoiseSchedule& sch);

struct DiffusionBatch {
    std::vector<std::uint32_t> items;
    TensorPtr rows;  // [B, |E|] binary adjacency rows
    std::vector<std::uint32_t> ts;
    TensorPtr eps;  // [B, |E|] standard normal
};

/// Densify the adjacency rows for a batch of items and draw per-row steps
/// and noise. Memory is O(batch * n_entities).
DiffusionBatch make_diffusion_batch(const KnowledgeGraph& kg,
                                    std::span<const std::uint32_t> items,
                                    const NoiseSchedule& sch, Rng& rng);

/// Dense [n_items, n_entities] matrix of the adjacency rows z_i.
TensorPtr dense_rows(const KnowledgeGraph& kg, std::span<const std::uint32_t> items);

/// Step-weighted squared reconstruction error, mean over the batch: weight 1
/// at t=1, 0.5*(abar_{t-1}/(1-abar_{t-1}) - abar_t/(1-abar_t)) for t >= 2.
TensorPtr elbo_from_prediction(const TensorPtr& x0, const TensorPtr& x_hat,
                               const std::vector<std::uint32_t>& ts, const NoiseSchedule& sch);

TensorPtr elbo_loss(const Denoiser& den, const DiffusionBatch& batch, const NoiseSchedule& sch);

/// Gaussian posterior mean of q(x_{t-1} | x_t, x_0) with x_0 replaced by the
/// prediction. At t=1 this collapses to the prediction itself.
TensorPtr posterior_mean(const TensorPtr& x_t, const TensorPtr& x0_hat, std::size_t t,
                         const NoiseSchedule& sch);

/// Deterministic inference: corrupt the rows for T' steps (none when T'=0),
/// then run the full reverse chain t = T..1 with the posterior mean only.
/// Runs without recording the tape.
TensorPtr reverse_generate(const Denoiser& den, const TensorPtr& rows, const NoiseSchedule& sch,
                           Rng& rng);

/// Rebuild a denoised graph: per item keep the k highest-scoring entities
/// (ties to the lower entity id). Relation labels are copied from the
/// original graph when the pair existed, else the globally most frequent
/// relation id.
KnowledgeGraph topk_rebuild(const TensorPtr& scores, std::size_t k, const KnowledgeGraph& original);

/// Collaborative convolution loss: user-entity affinities A·chi0 carry the
/// user embeddings onto entities, chi0 carries them back onto items, and the
/// result is matched to the item embeddings in mean squared error. Rows of
/// both chi0 factors are sum-normalized with a 1e-8 floor.
TensorPtr ckgc_loss(const SpMatPtr& A, const TensorPtr& chi0, const TensorPtr& user_emb,
                    const TensorPtr& item_emb);

}  // namespace diffkg
