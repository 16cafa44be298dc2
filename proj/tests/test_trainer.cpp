#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>

#include "diffkg/errors.hpp"
#include "diffkg/synth.hpp"
#include "diffkg/trainer.hpp"
#include "doctest.h"

using namespace diffkg;
namespace fs = std::filesystem;

namespace {

std::pair<DatasetSplit, KnowledgeGraph> small_dataset(std::uint64_t seed) {
    auto data = make_cf_dataset(seed, /*n_users=*/40, /*n_items=*/20, /*per_user=*/8,
                                /*clusters_per_community=*/2, /*own_cluster_prob=*/0.7,
                                /*own_community_prob=*/0.95, /*attr_per_community=*/4,
                                /*links_per_item=*/2, /*noise_frac=*/0.3);
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    for (auto& [u, i] : data.interactions) raw.emplace_back(u, i);
    auto g = InteractionGraph::from_pairs(raw);
    auto s = split(g, 0.2, seed);
    auto kg = KnowledgeGraph::build(data.triplets, g.n_items);
    return {std::move(s), std::move(kg)};
}

HyperParams small_hp(std::uint64_t seed) {
    HyperParams hp;
    hp.d = 8;
    hp.cf_layers = 2;
    hp.denoiser_hidden = 16;
    hp.batch_rec = 64;
    hp.batch_diff = 32;
    hp.lambda1 = real(0.02);  // the contrastive sum dwarfs the BPR mean at 1.0
    hp.lr_rec = real(0.02);
    hp.lr_diff = real(0.01);
    hp.rebuild_k = 2;
    hp.rho_kg = real(0.3);
    hp.rho_out = real(0.1);
    hp.metric_n = 5;
    hp.seed = seed;
    return hp;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("loss combiners") {
    SUBCASE("kgdm is the exact affine combination") {
        auto elbo = Tensor::scalar(2);
        auto ckgc = Tensor::scalar(4);
        CHECK(kgdm_loss(elbo, ckgc, 0)->item() == doctest::Approx(2.0));
        CHECK(kgdm_loss(elbo, ckgc, 1)->item() == doctest::Approx(4.0));
        CHECK(kgdm_loss(elbo, ckgc, 0.5)->item() == doctest::Approx(3.0));
    }
    SUBCASE("rec loss is the exact affine combination") {
        auto bpr = Tensor::scalar(0.5);
        auto cl = Tensor::scalar(2.0);
        auto l2 = Tensor::scalar(3.0);
        auto total = add(add(bpr, scale(cl, 0.3)), scale(l2, 0.1));
        CHECK(total->item() == doctest::Approx(0.5 + 0.6 + 0.3));
    }
    SUBCASE("bpr values") {
        auto same = bpr_loss(Tensor::from({2, 1}, {1, -3}), Tensor::from({2, 1}, {1, -3}));
        CHECK(same->item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        auto one = bpr_loss(Tensor::from({1, 1}, {2}), Tensor::from({1, 1}, {1}));
        CHECK(one->item() == doctest::Approx(0.3132616875182228).epsilon(1e-9));
        auto far = bpr_loss(Tensor::from({1, 1}, {60}), Tensor::from({1, 1}, {0}));
        CHECK(far->item() < 1e-12);
    }
    SUBCASE("paper-reported best contrastive setting is the default") {
        HyperParams hp;
        CHECK(hp.lambda1 == doctest::Approx(1.0));
        CHECK(hp.tau == doctest::Approx(1.0));
        CHECK(hp.T == 5);
        CHECK(hp.T_prime == 0);
    }
    SUBCASE("hyperparameter bounds enforced") {
        HyperParams hp;
        hp.lambda0 = real(1.5);
        CHECK_THROWS_WITH_AS(hp.validate(), doctest::Contains("lambda0"), UsageError);
        hp = HyperParams{};
        hp.tau = 0;
        CHECK_THROWS_AS(hp.validate(), UsageError);
    }
}

TEST_CASE("train_epoch") {
    auto [s, kg] = small_dataset(3);

    SUBCASE("losses stay finite for 5 epochs") {
        Trainer tr(s, kg, small_hp(3));
        for (int e = 0; e < 5; ++e) {
            auto st = tr.train_epoch();
            CHECK(std::isfinite(st.elbo));
            CHECK(std::isfinite(st.ckgc));
            CHECK(std::isfinite(st.bpr));
            CHECK(std::isfinite(st.cl));
        }
        auto res = tr.evaluate();
        CHECK(res.users_evaluated > 0);
    }
    SUBCASE("disable_dm skips diffusion and keeps the raw graph") {
        auto hp = small_hp(3);
        hp.disable_dm = true;
        Trainer tr(s, kg, hp);
        auto st = tr.train_epoch();
        CHECK(st.elbo == 0.0);
        CHECK(st.ckgc == 0.0);
        CHECK(st.bpr > 0.0);
        CHECK(tr.denoised_kg().triplets == kg.triplets);
    }
    SUBCASE("disable_ckgc forces the ckgc term off") {
        auto hp = small_hp(3);
        hp.disable_ckgc = true;
        hp.lambda0 = real(0.9);
        Trainer tr(s, kg, hp);
        auto st = tr.train_epoch();
        CHECK(st.ckgc == 0.0);
        CHECK(st.elbo > 0.0);
    }
    SUBCASE("disable_cl drops the contrastive term") {
        auto hp = small_hp(3);
        hp.disable_cl = true;
        Trainer tr(s, kg, hp);
        auto st = tr.train_epoch();
        CHECK(st.cl == 0.0);
        CHECK(st.bpr > 0.0);
    }
    SUBCASE("rebuilt graph selects k entities per item") {
        auto hp = small_hp(3);
        Trainer tr(s, kg, hp);
        tr.train_epoch();
        std::vector<std::size_t> picks(tr.denoised_kg().n_items, 0);
        for (const auto& t : tr.denoised_kg().triplets) ++picks[t.head];
        for (auto c : picks) CHECK(c == hp.rebuild_k);
    }
    SUBCASE("non-finite loss aborts with the epoch and phase named") {
        auto hp = small_hp(3);
        Trainer tr(s, kg, hp);
        auto& w = tr.model().denoiser.W1->values;
        w[0] = std::numeric_limits<real>::infinity();
        CHECK_THROWS_WITH_AS(tr.train_epoch(), doctest::Contains("epoch 1"), NumericError);
    }
    SUBCASE("same seed gives bitwise-identical losses and parameters") {
        auto hp = small_hp(11);
        Trainer a(s, kg, hp);
        Trainer b(s, kg, hp);
        for (int e = 0; e < 2; ++e) {
            auto sa = a.train_epoch();
            auto sb = b.train_epoch();
            CHECK(sa.elbo == sb.elbo);
            CHECK(sa.ckgc == sb.ckgc);
            CHECK(sa.bpr == sb.bpr);
            CHECK(sa.cl == sb.cl);
        }
        CHECK(a.model().user_emb->values == b.model().user_emb->values);
        CHECK(a.model().denoiser.W1->values == b.model().denoiser.W1->values);
    }
}

TEST_CASE("bpr decreases over the first 10 epochs averaged over 3 seeds") {
    std::vector<double> avg(10, 0);
    for (std::uint64_t seed : {1, 2, 3}) {
        auto [s, kg] = small_dataset(seed);
        auto hp = small_hp(seed);
        Trainer tr(s, kg, hp);
        for (int e = 0; e < 10; ++e) avg[e] += tr.train_epoch().bpr / 3.0;
    }
    for (int e = 1; e < 10; ++e) CHECK(avg[e] < avg[e - 1]);
}

TEST_CASE("checkpointing") {
    auto [s, kg] = small_dataset(5);
    auto hp = small_hp(5);
    auto path = (fs::temp_directory_path() / "diffkg_test.ckpt").string();

    SUBCASE("save, load into a fresh trainer, save again: identical bytes") {
        Trainer a(s, kg, hp);
        a.train_epoch();
        a.save_checkpoint(path);
        auto bytes_a = file_bytes(path);
        auto eval_a = a.evaluate();

        Trainer b(s, kg, hp);
        b.load_checkpoint(path);
        auto path_b = path + ".b";
        b.save_checkpoint(path_b);
        CHECK(file_bytes(path_b) == bytes_a);

        auto eval_b = b.evaluate();
        CHECK(eval_b.recall == eval_a.recall);
        CHECK(eval_b.ndcg == eval_a.ndcg);
    }
    SUBCASE("truncated checkpoint is rejected without partial state") {
        Trainer a(s, kg, hp);
        a.train_epoch();
        a.save_checkpoint(path);
        auto bytes = file_bytes(path);
        std::ofstream(path + ".trunc", std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));

        Trainer b(s, kg, hp);
        auto before = b.model().user_emb->values;
        CHECK_THROWS_AS(b.load_checkpoint(path + ".trunc"), DataError);
        CHECK(b.model().user_emb->values == before);
    }
    SUBCASE("version mismatch is rejected") {
        Trainer a(s, kg, hp);
        a.save_checkpoint(path);
        auto bytes = file_bytes(path);
        bytes[4] = 9;  // version field
        std::ofstream(path + ".v9", std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        Trainer b(s, kg, hp);
        CHECK_THROWS_WITH_AS(b.load_checkpoint(path + ".v9"), doctest::Contains("version"),
                             DataError);
    }
}

TEST_CASE("run writes one CSV row per epoch and reproduces bitwise") {
    auto [s, kg] = small_dataset(7);
    auto hp = small_hp(7);
    hp.eval_every = 2;
    auto dir = fs::temp_directory_path();
    Trainer a(s, kg, hp);
    a.run(4, (dir / "dk_run_a.csv").string());
    Trainer b(s, kg, hp);
    b.run(4, (dir / "dk_run_b.csv").string());
    auto csv_a = file_bytes((dir / "dk_run_a.csv").string());
    CHECK(csv_a == file_bytes((dir / "dk_run_b.csv").string()));
    std::size_t rows = std::count(csv_a.begin(), csv_a.end(), '\n');
    CHECK(rows == 5);  // header + 4 epochs
    CHECK(csv_a.substr(0, csv_a.find('\n')) == "epoch,elbo,ckgc,bpr,cl,recall@5,ndcg@5");
}
