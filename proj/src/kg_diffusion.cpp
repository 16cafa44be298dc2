#include "diffkg/kg_diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diffkg {

real NoiseSchedule::alpha_bar(std::size_t t) const {
    if (t == 0) return real(1);
    if (t > steps) throw std::invalid_argument("alpha_bar: step " + std::to_string(t) + " > T");
    return real(1) - one_minus_abar[t - 1];
}

real NoiseSchedule::alpha(std::size_t t) const { return alpha_bar(t) / alpha_bar(t - 1); }

real NoiseSchedule::beta(std::size_t t) const { return real(1) - alpha(t); }

real NoiseSchedule::posterior_variance(std::size_t t) const {
    return beta(t) * (real(1) - alpha_bar(t - 1)) / (real(1) - alpha_bar(t));
}

NoiseSchedule build_schedule(std::size_t T, std::size_t T_prime, real s, real alpha_low,
                             real alpha_up) {
    if (T < 1) throw std::invalid_argument("build_schedule: T must be >= 1, got " + std::to_string(T));
    if (T_prime > T) {
        throw std::invalid_argument("build_schedule: T' = " + std::to_string(T_prime) +
                                    " exceeds T = " + std::to_string(T));
    }
    if (!(s > real(0) && s <= real(1))) {
        throw std::invalid_argument("build_schedule: s must be in (0,1], got " + std::to_string(s));
    }
    if (!(alpha_low > real(0) && alpha_low < alpha_up && alpha_up < real(1))) {
        throw std::invalid_argument("build_schedule: need 0 < alpha_low < alpha_up < 1, got alpha_low=" +
                                    std::to_string(alpha_low) + " alpha_up=" + std::to_string(alpha_up));
    }
    NoiseSchedule sch;
    sch.steps = T;
    sch.inference_steps = T_prime;
    sch.s = s;
    sch.alpha_low = alpha_low;
    sch.alpha_up = alpha_up;
    sch.one_minus_abar.resize(T);
    for (std::size_t t = 1; t <= T; ++t) {
        real frac = T == 1 ? real(0) : real(t - 1) / real(T - 1);
        sch.one_minus_abar[t - 1] = s * (alpha_low + frac * (alpha_up - alpha_low));
    }
    return sch;
}

Denoiser make_denoiser(std::size_t width, std::size_t hidden, std::size_t step_dim,
                       real leaky_slope, Rng& rng) {
    Denoiser d;
    d.width = width;
    d.hidden = hidden;
    d.step_dim = step_dim;
    d.leaky_slope = leaky_slope;
    std::size_t in = width + step_dim;
    d.W1 = Tensor::create({in, hidden}, true);
    rng.fill_uniform_sym(d.W1->values, real(1) / std::sqrt(real(in)));
    d.b1 = Tensor::create({hidden}, true);
    d.W2 = Tensor::create({hidden, width}, true);
    rng.fill_uniform_sym(d.W2->values, real(1) / std::sqrt(real(hidden)));
    d.b2 = Tensor::create({width}, true);
    return d;
}

TensorPtr step_embedding(const std::vector<std::uint32_t>& ts, std::size_t dim) {
    auto emb = Tensor::create({ts.size(), dim});
    for (std::size_t r = 0; r < ts.size(); ++r) {
        for (std::size_t j = 0; j < dim; j += 2) {
            real freq = std::pow(real(10000), -real(j) / real(dim));
            real angle = real(ts[r]) * freq;
            emb->values[r * dim + j] = std::sin(angle);
            if (j + 1 < dim) emb->values[r * dim + j + 1] = std::cos(angle);
        }
    }
    return emb;
}

TensorPtr predict_x0(const Denoiser& den, const TensorPtr& x_t,
                     const std::vector<std::uint32_t>& ts) {
    if (x_t->cols() != den.width) {
        throw std::invalid_argument("predict_x0: input " + x_t->shape_str() + " vs denoiser width " +
                                    std::to_string(den.width));
    }
    auto in = concat_cols(x_t, step_embedding(ts, den.step_dim));
    auto h = leaky_relu(add_rowvec(matmul(in, den.W1), den.b1), den.leaky_slope);
    return add_rowvec(matmul(h, den.W2), den.b2);
}

TensorPtr q_step(const TensorPtr& x_prev, std::size_t t, const TensorPtr& eps,
                 const NoiseSchedule& sch) {
    real b = sch.beta(t);
    return add(scale(x_prev, std::sqrt(real(1) - b)), scale(eps, std::sqrt(b)));
}

TensorPtr q_sample(const TensorPtr& x0, const std::vector<std::uint32_t>& ts, const TensorPtr& eps,
                   const NoiseSchedule& sch) {
    if (x0->shape != eps->shape) {
        throw std::invalid_argument("q_sample: shape mismatch " + x0->shape_str() + " vs " +
                                    eps->shape_str());
    }
    if (ts.size() != x0->rows()) {
        throw std::invalid_argument("q_sample: need one step per row");
    }
    std::size_t c = x0->cols();
    auto out = Tensor::create(x0->shape);
    for (std::size_t r = 0; r < ts.size(); ++r) {
        real ab = sch.alpha_bar(ts[r]);
        real cs = std::sqrt(ab);
        real cn = std::sqrt(real(1) - ab);
        for (std::size_t j = 0; j < c; ++j) {
            out->values[r * c + j] = cs * x0->values[r * c + j] + cn * eps->values[r * c + j];
        }
    }
    return out;
}

TensorPtr dense_rows(const KnowledgeGraph& kg, std::span<const std::uint32_t> items) {
    auto rows = Tensor::create({items.size(), kg.n_entities});
    for (std::size_t r = 0; r < items.size(); ++r) {
        for (std::uint32_t e : kg.row(items[r])) rows->values[r * kg.n_entities + e] = real(1);
    }
    return rows;
}

DiffusionBatch make_diffusion_batch(const KnowledgeGraph& kg,
                                    std::span<const std::uint32_t> items,
                                    const NoiseSchedule& sch, Rng& rng) {
    DiffusionBatch b;
    b.items.assign(items.begin(), items.end());
    b.rows = dense_rows(kg, items);
    b.ts.resize(items.size());
    for (auto& t : b.ts) t = static_cast<std::uint32_t>(1 + rng.below(sch.steps));
    b.eps = Tensor::create(b.rows->shape);
    rng.fill_normal(b.eps->values);
    return b;
}

TensorPtr elbo_from_prediction(const TensorPtr& x0, const TensorPtr& x_hat,
                               const std::vector<std::uint32_t>& ts, const NoiseSchedule& sch) {
    std::size_t b = x0->rows();
    auto weights = Tensor::create({b, 1});
    for (std::size_t r = 0; r < b; ++r) {
        std::size_t t = ts[r];
        if (t == 1) {
            weights->values[r] = real(1);
        } else {
            real ab_prev = sch.alpha_bar(t - 1);
            real ab = sch.alpha_bar(t);
            weights->values[r] =
                real(0.5) * (ab_prev / (real(1) - ab_prev) - ab / (real(1) - ab));
        }
    }
    auto diff = sub(x_hat, x0);
    auto per_row = row_sum(mul(diff, diff));
    return scale(sum_all(mul(per_row, weights)), real(1) / real(b));
}

TensorPtr elbo_loss(const Denoiser& den, const DiffusionBatch& batch, const NoiseSchedule& sch) {
    auto x_t = q_sample(batch.rows, batch.ts, batch.eps, sch);
    auto x_hat = predict_x0(den, x_t, batch.ts);
    return elbo_from_prediction(batch.rows, x_hat, batch.ts, sch);
}

TensorPtr posterior_mean(const TensorPtr& x_t, const TensorPtr& x0_hat, std::size_t t,
                         const NoiseSchedule& sch) {
    if (t < 1) throw std::invalid_argument("posterior_mean: t must be >= 1");
    real ab_prev = sch.alpha_bar(t - 1);
    real ab = sch.alpha_bar(t);
    real c0 = std::sqrt(ab_prev) * sch.beta(t) / (real(1) - ab);
    real c1 = std::sqrt(sch.alpha(t)) * (real(1) - ab_prev) / (real(1) - ab);
    return add(scale(x0_hat, c0), scale(x_t, c1));
}

TensorPtr reverse_generate(const Denoiser& den, const TensorPtr& rows, const NoiseSchedule& sch,
                           Rng& rng) {
    NoGradGuard guard;
    TensorPtr x;
    if (sch.inference_steps == 0) {
        x = rows->detached();
    } else {
        auto eps = Tensor::create(rows->shape);
        rng.fill_normal(eps->values);
        std::vector<std::uint32_t> ts(rows->rows(),
                                      static_cast<std::uint32_t>(sch.inference_steps));
        x = q_sample(rows, ts, eps, sch);
    }
    for (std::size_t t = sch.steps; t >= 1; --t) {
        std::vector<std::uint32_t> ts(rows->rows(), static_cast<std::uint32_t>(t));
        x = posterior_mean(x, predict_x0(den, x, ts), t, sch);
    }
    return x;
}

KnowledgeGraph topk_rebuild(const TensorPtr& scores, std::size_t k,
                            const KnowledgeGraph& original) {
    std::size_t n_items = scores->rows();
    std::size_t n_ent = scores->cols();
    if (n_items != original.n_items || n_ent != original.n_entities) {
        throw std::invalid_argument("topk_rebuild: scores " + scores->shape_str() +
                                    " do not match the graph");
    }
    if (k < 1 || k > n_ent) {
        throw std::invalid_argument("topk_rebuild: k = " + std::to_string(k) +
                                    " out of range for " + std::to_string(n_ent) + " entities");
    }
    std::vector<Triplet> rebuilt;
    rebuilt.reserve(n_items * k);
    std::vector<std::uint32_t> order(n_ent);
    for (std::uint32_t i = 0; i < n_items; ++i) {
        const real* row = scores->values.data() + std::size_t(i) * n_ent;
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [row](std::uint32_t a, std::uint32_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return a < b;
                          });
        for (std::size_t j = 0; j < k; ++j) {
            std::uint32_t e = order[j];
            rebuilt.push_back({i, original.relation_for(i, e), e});
        }
    }
    return KnowledgeGraph::build(std::move(rebuilt), n_items);
}

TensorPtr ckgc_loss(const SpMatPtr& A, const TensorPtr& chi0, const TensorPtr& user_emb,
                    const TensorPtr& item_emb) {
    if (A->rows() != user_emb->rows() || A->cols() != chi0->rows() ||
        chi0->rows() != item_emb->rows()) {
        throw std::invalid_argument(
            "ckgc_loss: inconsistent shapes, A [" + std::to_string(A->rows()) + "," +
            std::to_string(A->cols()) + "] chi0 " + chi0->shape_str() + " E_u " +
            user_emb->shape_str() + " E_i " + item_emb->shape_str());
    }
    auto item_paths = row_sum_normalize(chi0);
    auto user_entity = row_sum_normalize(spmm(A, chi0));
    auto entity_emb = matmul_tn(user_entity, user_emb);   // [E, d]
    auto rebuilt_items = matmul(item_paths, entity_emb);  // [I, d]
    return scale(sum_sq(sub(rebuilt_items, item_emb)), real(1) / real(item_emb->rows()));
}

}  // namespace diffkg
