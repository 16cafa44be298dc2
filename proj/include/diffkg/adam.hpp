#pragma once

#include <cstdint>
#include <vector>

#include "diffkg/tensor.hpp"

namespace diffkg {

struct AdamConfig {
    real lr = real(1e-3);
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real eps = real(1e-8);
};

/// Bias-corrected Adam over a fixed parameter group. Moment arrays are
/// created lazily on the first step and mirror each parameter's shape.
class Adam {
public:
    Adam(std::vector<TensorPtr> params, AdamConfig cfg);

    /// One update from the gradients currently stored on the parameters.
    /// Throws NumericError if any gradient is non-finite.
    void step();

    void zero_grad();

    std::int64_t step_count() const { return step_; }
    const std::vector<TensorPtr>& params() const { return params_; }

    // Exposed for checkpointing; moments are parallel to params().
    std::vector<std::vector<real>>& first_moments() { return m_; }
    std::vector<std::vector<real>>& second_moments() { return v_; }
    const std::vector<std::vector<real>>& first_moments() const { return m_; }
    const std::vector<std::vector<real>>& second_moments() const { return v_; }
    void set_step_count(std::int64_t s) { step_ = s; }

private:
    std::vector<TensorPtr> params_;
    AdamConfig cfg_;
    std::vector<std::vector<real>> m_;
    std::vector<std::vector<real>> v_;
    std::int64_t step_ = 0;
};

}  // namespace diffkg
