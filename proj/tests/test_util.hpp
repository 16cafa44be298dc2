#pragma once

#include <vector>

#include "diffkg/rng.hpp"
#include "diffkg/tensor.hpp"

namespace dt {

inline diffkg::TensorPtr rand_tensor(diffkg::Rng& rng, std::vector<std::size_t> shape,
                                     bool requires_grad = true, diffkg::real scale = 1.0) {
    auto t = diffkg::Tensor::create(std::move(shape), requires_grad);
    for (auto& v : t->values) v = rng.normal() * scale;
    return t;
}

inline diffkg::TensorPtr rand_positive(diffkg::Rng& rng, std::vector<std::size_t> shape,
                                       bool requires_grad = true) {
    auto t = diffkg::Tensor::create(std::move(shape), requires_grad);
    for (auto& v : t->values) v = diffkg::real(0.2) + rng.uniform();
    return t;
}

}  // namespace dt
