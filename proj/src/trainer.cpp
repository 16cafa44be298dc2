#include "diffkg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "diffkg/checkpoint.hpp"
#include "diffkg/errors.hpp"
#include "diffkg/kg_diffusion.hpp"

namespace diffkg {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw UsageError("invalid " + field + ": " + what);
}

void check_finite(const TensorPtr& loss, std::size_t epoch, const char* phase) {
    if (!std::isfinite(loss->item())) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", " + phase);
    }
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

HyperParams validated(HyperParams hp) {
    hp.validate();
    return hp;
}

}  // namespace

void HyperParams::validate() const {
    require(lambda0 >= 0 && lambda0 <= 1, "lambda0", "must be in [0,1]");
    require(lambda1 >= 0, "lambda1", "must be >= 0");
    require(lambda2 >= 0, "lambda2", "must be >= 0");
    require(tau > 0, "tau", "must be > 0");
    require(rebuild_k >= 1, "k", "must be >= 1");
    require(d >= 1, "d", "must be >= 1");
    require(T >= 1, "T", "must be >= 1");
    require(T_prime <= T, "T_prime", "must be <= T");
    require(s > 0 && s <= 1, "s", "must be in (0,1]");
    require(alpha_low > 0 && alpha_low < alpha_up && alpha_up < 1, "alpha_low/alpha_up",
            "need 0 < alpha_low < alpha_up < 1");
    require(rho_kg >= 0 && rho_kg < 1, "rho_kg", "must be in [0,1)");
    require(rho_out >= 0 && rho_out < 1, "rho_out", "must be in [0,1)");
    require(lr_rec > 0 && lr_diff > 0, "lr", "must be > 0");
    require(batch_rec >= 1 && batch_diff >= 1, "batch size", "must be >= 1");
    require(metric_n >= 1, "N", "must be >= 1");
    require(eval_every >= 1, "eval_every", "must be >= 1");
}

TensorPtr kgdm_loss(const TensorPtr& elbo, const TensorPtr& ckgc, real lambda0) {
    return add(scale(elbo, real(1) - lambda0), scale(ckgc, lambda0));
}

TensorPtr bpr_loss(const TensorPtr& pos_scores, const TensorPtr& neg_scores) {
    return mean_all(softplus(neg(sub(pos_scores, neg_scores))));
}

Trainer::Trainer(DatasetSplit split, KnowledgeGraph kg, HyperParams hp)
    : split_(std::move(split)),
      kg_(std::move(kg)),
      hp_(validated(hp)),
      rng_(hp.seed),
      model_(make_model(
          ModelSizes{
              .n_users = split_.n_users,
              .n_items = split_.n_items,
              .n_entities = kg_.n_entities,
              .n_relations = kg_.n_relations,
              .d = hp_.d,
              .cf_layers = hp_.cf_layers,
              .agg_depth = hp_.agg_depth,
              .denoiser_hidden = hp_.denoiser_hidden,
              .step_dim = hp_.step_dim,
              .rho_kg = hp_.rho_kg,
              .rho_out = hp_.rho_out,
              .leaky_slope = hp_.leaky_slope,
          },
          rng_)),
      sched_(build_schedule(hp_.T, hp_.T_prime, hp_.s, hp_.alpha_low, hp_.alpha_up)),
      norm_adj_(build_norm_adjacency(split_)),
      gk_prime_(kg_),
      gk_prime_view_(KgView::full(gk_prime_)),
      adam_rec_(model_.rec_params(), {.lr = hp_.lr_rec}),
      adam_diff_(model_.diff_params(), {.lr = hp_.lr_diff}) {
    if (kg_.n_items != split_.n_items) {
        throw DataError("knowledge graph covers " + std::to_string(kg_.n_items) +
                        " items but the interaction data has " + std::to_string(split_.n_items));
    }
    if (hp_.rebuild_k > kg_.n_entities) {
        throw UsageError("invalid k: " + std::to_string(hp_.rebuild_k) + " exceeds the entity count " +
                         std::to_string(kg_.n_entities));
    }
    train_item_users_.resize(split_.n_items);
    for (std::uint32_t u = 0; u < split_.n_users; ++u) {
        for (std::uint32_t i : split_.train[u]) train_item_users_[i].push_back(u);
    }
}

void Trainer::refresh_denoised() {
    if (hp_.disable_dm) return;
    auto scores = Tensor::create({split_.n_items, kg_.n_entities});
    std::vector<std::uint32_t> items(split_.n_items);
    std::iota(items.begin(), items.end(), 0);
    for (std::size_t start = 0; start < items.size(); start += hp_.batch_diff) {
        std::size_t count = std::min(hp_.batch_diff, items.size() - start);
        std::span<const std::uint32_t> chunk(items.data() + start, count);
        auto rows = dense_rows(kg_, chunk);
        auto out = reverse_generate(model_.denoiser, rows, sched_, rng_);
        std::copy(out->values.begin(), out->values.end(),
                  scores->values.begin() + start * kg_.n_entities);
    }
    gk_prime_ = topk_rebuild(scores, hp_.rebuild_k, kg_);
    gk_prime_view_ = KgView::full(gk_prime_);
}

EpochStats Trainer::train_epoch() {
    ++epoch_;
    EpochStats stats;

    if (!hp_.disable_dm) {
        std::vector<std::uint32_t> items(split_.n_items);
        std::iota(items.begin(), items.end(), 0);
        rng_.shuffle(items);
        real lambda0 = hp_.disable_ckgc ? real(0) : hp_.lambda0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < items.size(); start += hp_.batch_diff) {
            std::size_t count = std::min(hp_.batch_diff, items.size() - start);
            std::span<const std::uint32_t> chunk(items.data() + start, count);
            auto batch = make_diffusion_batch(kg_, chunk, sched_, rng_);
            auto x_t = q_sample(batch.rows, batch.ts, batch.eps, sched_);
            auto x_hat = predict_x0(model_.denoiser, x_t, batch.ts);
            auto elbo = elbo_from_prediction(batch.rows, x_hat, batch.ts, sched_);
            TensorPtr loss = elbo;
            if (lambda0 > 0) {
                std::vector<std::tuple<std::uint32_t, std::uint32_t, real>> entries;
                for (std::size_t b = 0; b < count; ++b) {
                    for (std::uint32_t u : train_item_users_[chunk[b]]) {
                        entries.emplace_back(u, static_cast<std::uint32_t>(b), real(1));
                    }
                }
                auto a_batch = std::make_shared<SpMat>(
                    SpMat::from_coo(split_.n_users, count, std::move(entries)));
                auto ckgc = ckgc_loss(a_batch, x_hat, model_.user_emb->detached(),
                                      gather_rows(model_.item_emb, {chunk.begin(), chunk.end()})
                                          ->detached());
                stats.ckgc += ckgc->item();
                loss = kgdm_loss(elbo, ckgc, lambda0);
            }
            check_finite(loss, epoch_, "diffusion phase");
            stats.elbo += elbo->item();
            adam_diff_.zero_grad();
            backward(loss);
            adam_diff_.step();
            ++n_batches;
        }
        if (n_batches > 0) {
            stats.elbo /= double(n_batches);
            stats.ckgc /= double(n_batches);
        }
        refresh_denoised();
    }

    std::size_t edges = split_.train_edge_count();
    std::size_t n_batches = std::max<std::size_t>(1, (edges + hp_.batch_rec - 1) / hp_.batch_rec);
    for (std::size_t b = 0; b < n_batches; ++b) {
        auto triples = sample_bpr_triples(split_, hp_.batch_rec, rng_);
        std::vector<std::uint32_t> us, is, js;
        us.reserve(triples.size());
        is.reserve(triples.size());
        js.reserve(triples.size());
        for (const auto& t : triples) {
            us.push_back(t.user);
            is.push_back(t.pos);
            js.push_back(t.neg);
        }

        TensorPtr loss;
        TensorPtr cl;
        TensorPtr xu2, xi2;
        if (hp_.disable_cl) {
            auto items2 = aggregate(gk_prime_view_, model_.item_emb, model_.attention, rng_, true);
            auto enc = encode(model_.user_emb, items2, norm_adj_, hp_.cf_layers);
            xu2 = enc.first;
            xi2 = enc.second;
        } else {
            auto dropped = kg_dropout(kg_, hp_.rho_kg, rng_.raw());
            auto views = build_views(dropped, gk_prime_view_, model_.user_emb, model_.item_emb,
                                     model_.attention, norm_adj_, hp_.cf_layers, hp_.tau, rng_,
                                     true);
            xu2 = views.user2;
            xi2 = views.item2;
            auto cl_users = sorted_unique(us);
            auto cl_items = sorted_unique(is);
            cl = add(infonce(gather_rows(views.user1, cl_users), gather_rows(views.user2, cl_users),
                             hp_.tau),
                     infonce(gather_rows(views.item1, cl_items), gather_rows(views.item2, cl_items),
                             hp_.tau));
            stats.cl += cl->item();
        }

        auto pos = row_sum(mul(gather_rows(xu2, us), gather_rows(xi2, is)));
        auto neg_s = row_sum(mul(gather_rows(xu2, us), gather_rows(xi2, js)));
        auto bpr = bpr_loss(pos, neg_s);
        stats.bpr += bpr->item();

        loss = bpr;
        if (cl) loss = add(loss, scale(cl, hp_.lambda1));
        if (hp_.lambda2 > 0) loss = add(loss, rec_l2_term());
        check_finite(loss, epoch_, "recommendation phase");
        adam_rec_.zero_grad();
        backward(loss);
        adam_rec_.step();
    }
    stats.bpr /= double(n_batches);
    stats.cl /= double(n_batches);
    return stats;
}

TensorPtr Trainer::rec_l2_term() const {
    TensorPtr sum;
    for (const auto& p : model_.rec_params()) {
        auto term = sum_sq(p);
        sum = sum ? add(sum, term) : term;
    }
    return scale(sum, hp_.lambda2);
}

std::pair<TensorPtr, TensorPtr> Trainer::final_encodings() const {
    NoGradGuard guard;
    Rng unused(0);
    auto items = aggregate(gk_prime_view_, model_.item_emb, model_.attention, unused, false);
    return encode(model_.user_emb, items, norm_adj_, hp_.cf_layers);
}

EvalResult Trainer::evaluate() const {
    auto [xu, xi] = final_encodings();
    return evaluate_full_rank(xu, xi, split_, hp_.metric_n);
}

EvalResult Trainer::run(std::size_t epochs, const std::string& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write metrics CSV: " + csv_path);
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    csv << "epoch,elbo,ckgc,bpr,cl,recall@" << hp_.metric_n << ",ndcg@" << hp_.metric_n << "\n";
    EvalResult last;
    for (std::size_t e = 1; e <= epochs; ++e) {
        auto stats = train_epoch();
        csv << e << "," << fmt(stats.elbo) << "," << fmt(stats.ckgc) << "," << fmt(stats.bpr) << ","
            << fmt(stats.cl);
        if (e % hp_.eval_every == 0 || e == epochs) {
            last = evaluate();
            csv << "," << fmt(last.recall) << "," << fmt(last.ndcg) << "\n";
        } else {
            csv << ",,\n";
        }
    }
    return last;
}

void Trainer::save_checkpoint(const std::string& path) const {
    std::vector<CheckpointEntry> entries;
    for (const auto& [name, t] : model_.named_params()) {
        entries.push_back({name, t->shape, t->values});
    }
    auto dump_adam = [&entries](const char* prefix, const Adam& opt,
                                const std::vector<std::pair<std::string, TensorPtr>>& named,
                                const std::vector<TensorPtr>& group) {
        const auto& m = opt.first_moments();
        const auto& v = opt.second_moments();
        for (std::size_t p = 0; p < group.size(); ++p) {
            std::string base;
            for (const auto& [name, t] : named) {
                if (t == group[p]) base = name;
            }
            entries.push_back({std::string(prefix) + "/" + base + "/m", group[p]->shape, m[p]});
            entries.push_back({std::string(prefix) + "/" + base + "/v", group[p]->shape, v[p]});
        }
        entries.push_back(
            {std::string(prefix) + "/step", {1}, {static_cast<real>(opt.step_count())}});
    };
    auto named = model_.named_params();
    dump_adam("adam_rec", adam_rec_, named, model_.rec_params());
    dump_adam("adam_diff", adam_diff_, named, model_.diff_params());
    entries.push_back({"epoch", {1}, {static_cast<real>(epoch_)}});
    write_checkpoint(path, entries);
}

void Trainer::load_checkpoint(const std::string& path) {
    auto entries = read_checkpoint(path);
    std::map<std::string, const CheckpointEntry*> by_name;
    for (const auto& e : entries) by_name[e.name] = &e;
    auto fetch = [&](const std::string& name, const std::vector<std::size_t>& dims) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DataError(path + ": missing entry " + name);
        if (it->second->dims != dims) {
            throw DataError(path + ": entry " + name + " has shape " +
                            shape_to_string(it->second->dims) + ", expected " +
                            shape_to_string(dims));
        }
        return it->second;
    };

    // Stage everything before mutating so a bad file leaves no partial state.
    struct Assign {
        std::vector<real>* dst;
        const std::vector<real>* src;
    };
    std::vector<Assign> assigns;
    auto named = model_.named_params();
    for (const auto& [name, t] : named) {
        assigns.push_back({&t->values, &fetch(name, t->shape)->data});
    }
    auto stage_adam = [&](const char* prefix, Adam& opt, const std::vector<TensorPtr>& group) {
        for (std::size_t p = 0; p < group.size(); ++p) {
            std::string base;
            for (const auto& [name, t] : named) {
                if (t == group[p]) base = name;
            }
            assigns.push_back({&opt.first_moments()[p],
                               &fetch(std::string(prefix) + "/" + base + "/m", group[p]->shape)->data});
            assigns.push_back({&opt.second_moments()[p],
                               &fetch(std::string(prefix) + "/" + base + "/v", group[p]->shape)->data});
        }
    };
    stage_adam("adam_rec", adam_rec_, model_.rec_params());
    stage_adam("adam_diff", adam_diff_, model_.diff_params());
    auto rec_step = fetch("adam_rec/step", {1})->data[0];
    auto diff_step = fetch("adam_diff/step", {1})->data[0];
    auto epoch = fetch("epoch", {1})->data[0];

    for (auto& a : assigns) *a.dst = *a.src;
    adam_rec_.set_step_count(static_cast<std::int64_t>(rec_step));
    adam_diff_.set_step_count(static_cast<std::int64_t>(diff_step));
    epoch_ = static_cast<std::size_t>(epoch);
    refresh_denoised();
}

}  // namespace diffkg
