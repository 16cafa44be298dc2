#include "diffkg/grad_check.hpp"

#include <cmath>

namespace diffkg {

real finite_diff_check(const std::function<TensorPtr()>& f,
                       const std::vector<TensorPtr>& params, real eps) {
    for (auto& p : params) {
        p->ensure_grad();
        p->zero_grad();
    }
    backward(f());

    std::vector<std::vector<real>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p->grad);

    real worst = real(0);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            real saved = p.values[i];
            p.values[i] = saved + eps;
            real up = f()->item();
            p.values[i] = saved - eps;
            real down = f()->item();
            p.values[i] = saved;
            real fd = (up - down) / (real(2) * eps);
            real err = std::abs(analytic[pi][i] - fd) /
                       (std::abs(analytic[pi][i]) + real(1e-8));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace diffkg
