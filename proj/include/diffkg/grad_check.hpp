#pragma once

#include <functional>
#include <vector>

#include "diffkg/tensor.hpp"

namespace diffkg {

/// Compare reverse-mode gradients of a deterministic scalar function against
/// central finite differences. `f` must rebuild its graph from the current
/// parameter values on every call (and keep any randomness fixed).
///
/// Returns max over parameter coordinates of
///   |analytic - central_difference| / (|analytic| + 1e-8).
real finite_diff_check(const std::function<TensorPtr()>& f,
                       const std::vector<TensorPtr>& params, real eps = real(1e-5));

}  // namespace diffkg
