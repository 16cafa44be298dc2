#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace diffkg {

#ifdef DIFFKG_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Thread-local switch: when disabled, ops do not record tape nodes and
/// their outputs never require gradients. Used for inference paths.
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool saved_;
};

/// Dense array of `real` with an optional gradient buffer and reverse-mode
/// tape links. Tensors are created through the factory functions and shared
/// via TensorPtr; ops in ops.hpp build the tape as a DAG of parent links.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<std::size_t> shape;
    std::vector<real> values;
    std::vector<real> grad;  // same length as values once requires_grad
    bool requires_grad = false;

    // Tape links: inputs of the op that produced this tensor, plus the
    // closure that routes this->grad into the parents' grad buffers.
    std::vector<TensorPtr> parents;
    std::function<void(const Tensor&)> backward_fn;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<real> v, bool rg);

    static TensorPtr create(std::vector<std::size_t> shape, bool requires_grad = false);
    static TensorPtr from(std::vector<std::size_t> shape, std::vector<real> values,
                          bool requires_grad = false);
    static TensorPtr full(std::vector<std::size_t> shape, real value, bool requires_grad = false);
    static TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static TensorPtr scalar(real value, bool requires_grad = false);

    std::size_t size() const { return values.size(); }
    bool is_scalar() const { return values.size() == 1; }
    bool is_matrix() const { return shape.size() == 2; }
    std::size_t rows() const;
    std::size_t cols() const;

    real item() const;
    real& at(std::size_t r, std::size_t c);
    real at(std::size_t r, std::size_t c) const;

    void ensure_grad();
    void zero_grad();

    /// Copy of the values with no grad and no tape links.
    TensorPtr detached() const;

    std::string shape_str() const;
};

/// Reverse-mode sweep from a scalar loss. Visits every tape node exactly
/// once in reverse topological order; leaf gradients accumulate across
/// calls, non-leaf gradients are reset per sweep.
void backward(const TensorPtr& loss);

std::size_t element_count(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace diffkg
