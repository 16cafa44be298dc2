#include "diffkg/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace diffkg {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<real> v, bool rg)
    : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
    if (values.size() != element_count(shape)) {
        throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                    " values do not fill shape " + shape_to_string(shape));
    }
    if (requires_grad) grad.assign(values.size(), real(0));
}

TensorPtr Tensor::create(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = element_count(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<real>(n, real(0)), requires_grad);
}

TensorPtr Tensor::from(std::vector<std::size_t> shape, std::vector<real> values, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(values), requires_grad);
}

TensorPtr Tensor::full(std::vector<std::size_t> shape, real value, bool requires_grad) {
    std::size_t n = element_count(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<real>(n, value), requires_grad);
}

TensorPtr Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    return create(std::move(shape), requires_grad);
}

TensorPtr Tensor::scalar(real value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (shape.size() != 2) throw std::invalid_argument("rows(): tensor is not 2-D, shape " + shape_str());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (shape.size() != 2) throw std::invalid_argument("cols(): tensor is not 2-D, shape " + shape_str());
    return shape[1];
}

real Tensor::item() const {
    if (!is_scalar()) throw std::invalid_argument("item(): tensor is not scalar, shape " + shape_str());
    return values[0];
}

real& Tensor::at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
real Tensor::at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), real(0));
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), real(0));
}

TensorPtr Tensor::detached() const {
    return Tensor::from(shape, values, false);
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

void backward(const TensorPtr& loss) {
    if (!loss) throw std::invalid_argument("backward: null loss");
    if (!loss->is_scalar()) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " + loss->shape_str());
    }

    // Post-order DFS over parent links; `order` ends children-before-parents,
    // so iterating it forward runs each node after its gradient is complete.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    struct Frame {
        Tensor* node;
        std::size_t next_child;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.get(), 0});
    visited.insert(loss.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.node->parents.size()) {
            Tensor* child = f.node->parents[f.next_child].get();
            ++f.next_child;
            if (visited.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    std::reverse(order.begin(), order.end());  // loss first

    for (Tensor* node : order) {
        node->ensure_grad();
        if (node->backward_fn) node->zero_grad();  // non-leaf: fresh per sweep
    }
    loss->zero_grad();
    loss->grad[0] = real(1);

    for (Tensor* node : order) {
        if (node->backward_fn) node->backward_fn(*node);
    }
}

}  // namespace diffkg
