#include "diffkg/adam.hpp"

#include <cmath>

#include "diffkg/errors.hpp"

namespace diffkg {

Adam::Adam(std::vector<TensorPtr> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t p = 0; p < params_.size(); ++p) {
        m_[p].assign(params_[p]->size(), real(0));
        v_[p].assign(params_[p]->size(), real(0));
        params_[p]->ensure_grad();
    }
}

void Adam::step() {
    ++step_;
    real bc1 = real(1) - std::pow(cfg_.beta1, real(step_));
    real bc2 = real(1) - std::pow(cfg_.beta2, real(step_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& t = *params_[p];
        t.ensure_grad();
        for (std::size_t i = 0; i < t.size(); ++i) {
            real g = t.grad[i];
            if (!std::isfinite(g)) {
                throw NumericError("adam: non-finite gradient in parameter " + std::to_string(p) +
                                   " at index " + std::to_string(i));
            }
            m_[p][i] = cfg_.beta1 * m_[p][i] + (real(1) - cfg_.beta1) * g;
            v_[p][i] = cfg_.beta2 * v_[p][i] + (real(1) - cfg_.beta2) * g * g;
            real mhat = m_[p][i] / bc1;
            real vhat = v_[p][i] / bc2;
            t.values[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) {
        p->ensure_grad();
        p->zero_grad();
    }
}

}  // namespace diffkg
