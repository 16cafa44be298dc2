#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffkg/adam.hpp"
#include "diffkg/evaluator.hpp"
#include "diffkg/graph_store.hpp"
#include "diffkg/model.hpp"
#include "diffkg/ssl_augment.hpp"

namespace diffkg {

/// The single configuration record for training. Defaults are this repo's;
/// see the README config reference.
struct HyperParams {
    real lambda0 = real(0.5);   // CKGC weight inside the diffusion loss
    real lambda1 = real(1.0);   // contrastive weight
    real lambda2 = real(1e-5);  // L2 weight
    real tau = real(1.0);
    std::size_t rebuild_k = 5;
    std::size_t d = 64;
    std::size_t cf_layers = 2;
    std::size_t agg_depth = 1;
    std::size_t T = 5;
    std::size_t T_prime = 0;
    real s = real(0.1);
    real alpha_low = real(1e-4);
    real alpha_up = real(1e-2);
    real rho_kg = real(0.5);
    real rho_out = real(0.1);
    real leaky_slope = real(0.2);
    real lr_rec = real(1e-3);
    real lr_diff = real(1e-3);
    std::size_t batch_rec = 1024;
    std::size_t batch_diff = 1024;
    std::size_t epochs = 50;
    std::size_t denoiser_hidden = 1024;
    std::size_t step_dim = 10;
    std::size_t metric_n = 20;
    std::size_t eval_every = 1;
    std::uint64_t seed = 1;
    bool disable_cl = false;
    bool disable_dm = false;
    bool disable_ckgc = false;

    /// Throws UsageError naming the offending field.
    void validate() const;
};

struct EpochStats {
    double elbo = 0, ckgc = 0, bpr = 0, cl = 0;
    std::optional<EvalResult> eval;
};

/// (1-lambda0) * elbo + lambda0 * ckgc.
TensorPtr kgdm_loss(const TensorPtr& elbo, const TensorPtr& ckgc, real lambda0);

/// Mean over triples of -log sigmoid(pos - neg).
TensorPtr bpr_loss(const TensorPtr& pos_scores, const TensorPtr& neg_scores);

/// Joint training: per epoch, (1) diffusion mini-batches minimizing the
/// kgdm loss, (2) one deterministic rebuild of the denoised KG, (3) BPR
/// mini-batches with contrastive views minimizing the recommendation loss.
class Trainer {
public:
    Trainer(DatasetSplit split, KnowledgeGraph kg, HyperParams hp);

    EpochStats train_epoch();

    /// Regenerate the denoised graph from the current denoiser (phase 2).
    void refresh_denoised();

    /// Final user/item encodings from the denoised view, dropout disabled.
    std::pair<TensorPtr, TensorPtr> final_encodings() const;

    EvalResult evaluate() const;

    /// Train `epochs` epochs, streaming one CSV row per epoch; returns the
    /// last evaluation.
    EvalResult run(std::size_t epochs, const std::string& csv_path);

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

    const DiffKgModel& model() const { return model_; }
    DiffKgModel& model() { return model_; }
    const KnowledgeGraph& denoised_kg() const { return gk_prime_; }
    const DatasetSplit& split() const { return split_; }
    const HyperParams& hp() const { return hp_; }
    std::size_t epoch() const { return epoch_; }

private:
    TensorPtr rec_l2_term() const;

    DatasetSplit split_;
    KnowledgeGraph kg_;
    HyperParams hp_;
    Rng rng_;
    DiffKgModel model_;
    NoiseSchedule sched_;
    SpMatPtr norm_adj_;
    std::vector<std::vector<std::uint32_t>> train_item_users_;
    KnowledgeGraph gk_prime_;
    KgView gk_prime_view_;
    Adam adam_rec_;
    Adam adam_diff_;
    std::size_t epoch_ = 0;
};

}  // namespace diffkg
