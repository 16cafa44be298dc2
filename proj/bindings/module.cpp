#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "diffkg/config.hpp"
#include "diffkg/evaluator.hpp"
#include "diffkg/kg_diffusion.hpp"
#include "diffkg/ssl_augment.hpp"
#include "diffkg/synth.hpp"
#include "diffkg/trainer.hpp"

namespace py = pybind11;
using namespace diffkg;

namespace {

TensorPtr tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    auto t = Tensor::create({static_cast<std::size_t>(a.shape(0)),
                             static_cast<std::size_t>(a.shape(1))});
    auto r = a.unchecked<2>();
    std::size_t k = 0;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) t->values[k++] = static_cast<real>(r(i, j));
    return t;
}

py::array_t<double> numpy_from_tensor(const TensorPtr& t) {
    py::array_t<double> out({t->rows(), t->cols()});
    auto w = out.mutable_unchecked<2>();
    std::size_t k = 0;
    for (std::size_t i = 0; i < t->rows(); ++i)
        for (std::size_t j = 0; j < t->cols(); ++j) w(i, j) = static_cast<double>(t->values[k++]);
    return out;
}

/// Training/evaluation handle: configure with a {key: value} dict (same keys
/// as the CLI), load data files, then drive epochs from python.
class Engine {
public:
    explicit Engine(const py::dict& config) {
        for (auto item : config) {
            apply_kv(cfg_, py::str(item.first).cast<std::string>(),
                     py::str(item.second).cast<std::string>());
        }
        validate_config(cfg_);
    }

    void load(const std::string& interactions, const std::string& kg) {
        auto g = load_interactions(interactions);
        auto s = split(g, cfg_.test_ratio, cfg_.hp.seed);
        auto k = load_triplets(kg, s.n_items);
        trainer_.emplace(std::move(s), std::move(k), cfg_.hp);
    }

    py::list train(std::size_t epochs) {
        py::list out;
        for (std::size_t e = 0; e < epochs; ++e) {
            auto st = t().train_epoch();
            py::dict row;
            row["epoch"] = t().epoch();
            row["elbo"] = st.elbo;
            row["ckgc"] = st.ckgc;
            row["bpr"] = st.bpr;
            row["cl"] = st.cl;
            out.append(row);
        }
        return out;
    }

    py::dict evaluate() {
        auto res = t().evaluate();
        py::dict out;
        out["recall"] = res.recall;
        out["ndcg"] = res.ndcg;
        out["users"] = res.users_evaluated;
        return out;
    }

    std::vector<std::pair<std::uint32_t, double>> recommend(std::uint32_t user, std::size_t n) {
        if (user >= t().split().n_users) {
            throw std::invalid_argument("unknown user id " + std::to_string(user));
        }
        auto [xu, xi] = t().final_encodings();
        std::size_t d = xu->cols();
        std::vector<real> scores(t().split().n_items);
        for (std::uint32_t i = 0; i < scores.size(); ++i) {
            real acc = 0;
            for (std::size_t j = 0; j < d; ++j) acc += xu->at(user, j) * xi->at(i, j);
            scores[i] = acc;
        }
        std::vector<std::pair<std::uint32_t, double>> out;
        for (auto i : rank_items(scores, t().split().train[user], n)) {
            out.emplace_back(i, static_cast<double>(scores[i]));
        }
        return out;
    }

    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> denoised_triplets() {
        std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> out;
        for (const auto& tr : t().denoised_kg().triplets) out.emplace_back(tr.head, tr.rel, tr.tail);
        return out;
    }

    void save(const std::string& path) { t().save_checkpoint(path); }
    void load_checkpoint(const std::string& path) { t().load_checkpoint(path); }

    std::size_t n_users() { return t().split().n_users; }
    std::size_t n_items() { return t().split().n_items; }

private:
    Trainer& t() {
        if (!trainer_) throw std::runtime_error("no data loaded; call load() first");
        return *trainer_;
    }

    RunConfig cfg_;
    std::optional<Trainer> trainer_;
};

}  // namespace

PYBIND11_MODULE(diffkg, m) {
    m.doc() = "KG-denoising diffusion recommender: schedules, metrics, and the training engine";

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("steps", &NoiseSchedule::steps)
        .def_readonly("inference_steps", &NoiseSchedule::inference_steps)
        .def_property_readonly("one_minus_alpha_bar",
                               [](const NoiseSchedule& s) {
                                   return std::vector<double>(s.one_minus_abar.begin(),
                                                              s.one_minus_abar.end());
                               })
        .def("alpha_bar", [](const NoiseSchedule& s, std::size_t t) { return double(s.alpha_bar(t)); })
        .def("beta", [](const NoiseSchedule& s, std::size_t t) { return double(s.beta(t)); });

    m.def("build_schedule", &build_schedule, py::arg("T"), py::arg("T_prime"), py::arg("s"),
          py::arg("alpha_low"), py::arg("alpha_up"));

    m.def(
        "q_sample",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x0,
           const std::vector<std::uint32_t>& ts,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& eps,
           const NoiseSchedule& sch) {
            return numpy_from_tensor(q_sample(tensor_from_numpy(x0), ts, tensor_from_numpy(eps), sch));
        },
        py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("schedule"));

    m.def(
        "recall_at_n",
        [](const std::vector<std::uint32_t>& ranked, std::vector<std::uint32_t> relevant,
           std::size_t n) {
            std::sort(relevant.begin(), relevant.end());
            return recall_at_n(ranked, relevant, n);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("n"));
    m.def(
        "ndcg_at_n",
        [](const std::vector<std::uint32_t>& ranked, std::vector<std::uint32_t> relevant,
           std::size_t n) {
            std::sort(relevant.begin(), relevant.end());
            return ndcg_at_n(ranked, relevant, n);
        },
        py::arg("ranked"), py::arg("relevant"), py::arg("n"));

    m.def(
        "k_core",
        [](const std::vector<std::pair<std::int64_t, std::int64_t>>& edges, std::size_t k) {
            auto g = k_core_filter(InteractionGraph::from_pairs(edges), k);
            std::vector<std::pair<std::int64_t, std::int64_t>> out;
            for (auto& [u, i] : g.edges) out.emplace_back(g.user_orig[u], g.item_orig[i]);
            return out;
        },
        py::arg("edges"), py::arg("k"), "Iterative k-core filtering; returns surviving edges");

    m.def(
        "infonce",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, double tau) {
            return double(infonce(tensor_from_numpy(a), tensor_from_numpy(b), real(tau))->item());
        },
        py::arg("view1"), py::arg("view2"), py::arg("tau"),
        "Sum over nodes of the cosine InfoNCE loss between two views");

    m.def("write_synth_datasets", &write_synth_datasets, py::arg("dir"), py::arg("seed"));

    py::class_<Engine>(m, "Engine")
        .def(py::init<const py::dict&>(), py::arg("config"))
        .def("load", &Engine::load, py::arg("interactions"), py::arg("kg"))
        .def("train", &Engine::train, py::arg("epochs"))
        .def("evaluate", &Engine::evaluate)
        .def("recommend", &Engine::recommend, py::arg("user"), py::arg("n"))
        .def("denoised_triplets", &Engine::denoised_triplets)
        .def("save", &Engine::save, py::arg("path"))
        .def("load_checkpoint", &Engine::load_checkpoint, py::arg("path"))
        .def_property_readonly("n_users", &Engine::n_users)
        .def_property_readonly("n_items", &Engine::n_items);

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "0.1.0";
#endif
}
