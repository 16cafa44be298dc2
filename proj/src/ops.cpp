#include "diffkg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffkg {

namespace {

constexpr real kLogClamp = real(1e-10);

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

void require_matrix(const char* op, const Tensor& a) {
    if (a.shape.size() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " + a.shape_str());
    }
}

bool track(const std::initializer_list<TensorPtr>& inputs) {
    if (!grad_enabled()) return false;
    for (const auto& t : inputs) {
        if (t->requires_grad) return true;
    }
    return false;
}

/// Wire `out` into the tape: parents are the grad-requiring inputs, `fn`
/// routes out->grad into them.
void record(const TensorPtr& out, std::initializer_list<TensorPtr> inputs,
            std::function<void(const Tensor&)> fn) {
    out->requires_grad = true;
    for (const auto& t : inputs) {
        if (t->requires_grad) out->parents.push_back(t);
    }
    out->backward_fn = std::move(fn);
}

real stable_sigmoid(real x) {
    if (x >= real(0)) {
        return real(1) / (real(1) + std::exp(-x));
    }
    real e = std::exp(x);
    return e / (real(1) + e);
}

// C += A(m,k)·B(k,n)
void gemm_nn(const real* A, const real* B, real* C, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            real a = A[i * k + p];
            if (a == real(0)) continue;
            const real* brow = B + p * n;
            real* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

// C += A(m,k)·B(n,k)ᵀ
void gemm_nt(const real* A, const real* B, real* C, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            real acc = real(0);
            const real* arow = A + i * k;
            const real* brow = B + j * k;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            C[i * n + j] += acc;
        }
    }
}

// C += A(m,k)ᵀ·B(m,n)
void gemm_tn(const real* A, const real* B, real* C, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const real* arow = A + i * k;
        const real* brow = B + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            real a = arow[p];
            if (a == real(0)) continue;
            real* crow = C + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("add", *a, *b);
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] + b->values[i];
    if (track({a, b})) {
        record(out, {a, b}, [a, b](const Tensor& self) {
            if (a->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
            if (b->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i];
        });
    }
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("sub", *a, *b);
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] - b->values[i];
    if (track({a, b})) {
        record(out, {a, b}, [a, b](const Tensor& self) {
            if (a->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
            if (b->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] -= self.grad[i];
        });
    }
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("mul", *a, *b);
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * b->values[i];
    if (track({a, b})) {
        record(out, {a, b}, [a, b](const Tensor& self) {
            if (a->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * b->values[i];
            if (b->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i] * a->values[i];
        });
    }
    return out;
}

TensorPtr scale(const TensorPtr& a, real c) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * c;
    if (track({a})) {
        record(out, {a}, [a, c](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * c;
        });
    }
    return out;
}

TensorPtr add_scalar(const TensorPtr& a, real c) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] + c;
    if (track({a})) {
        record(out, {a}, [a](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
        });
    }
    return out;
}

TensorPtr neg(const TensorPtr& a) { return scale(a, real(-1)); }

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("matmul", *a);
    require_matrix("matmul", *b);
    if (a->cols() != b->rows()) {
        throw std::invalid_argument("matmul: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
    }
    std::size_t m = a->rows(), k = a->cols(), n = b->cols();
    auto out = Tensor::create({m, n});
    gemm_nn(a->values.data(), b->values.data(), out->values.data(), m, k, n);
    if (track({a, b})) {
        record(out, {a, b}, [a, b, m, k, n](const Tensor& self) {
            if (a->requires_grad)
                gemm_nt(self.grad.data(), b->values.data(), a->grad.data(), m, n, k);
            if (b->requires_grad)
                gemm_tn(a->values.data(), self.grad.data(), b->grad.data(), m, k, n);
        });
    }
    return out;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("matmul_nt", *a);
    require_matrix("matmul_nt", *b);
    if (a->cols() != b->cols()) {
        throw std::invalid_argument("matmul_nt: shape mismatch " + a->shape_str() + " vs " +
                                    b->shape_str());
    }
    std::size_t m = a->rows(), k = a->cols(), n = b->rows();
    auto out = Tensor::create({m, n});
    gemm_nt(a->values.data(), b->values.data(), out->values.data(), m, k, n);
    if (track({a, b})) {
        record(out, {a, b}, [a, b, m, k, n](const Tensor& self) {
            if (a->requires_grad)
                gemm_nn(self.grad.data(), b->values.data(), a->grad.data(), m, n, k);
            if (b->requires_grad)
                gemm_tn(self.grad.data(), a->values.data(), b->grad.data(), m, n, k);
        });
    }
    return out;
}

TensorPtr matmul_tn(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("matmul_tn", *a);
    require_matrix("matmul_tn", *b);
    if (a->rows() != b->rows()) {
        throw std::invalid_argument("matmul_tn: shape mismatch " + a->shape_str() + " vs " +
                                    b->shape_str());
    }
    std::size_t m = a->rows(), k = a->cols(), n = b->cols();
    auto out = Tensor::create({k, n});
    gemm_tn(a->values.data(), b->values.data(), out->values.data(), m, k, n);
    if (track({a, b})) {
        record(out, {a, b}, [a, b, m, k, n](const Tensor& self) {
            if (a->requires_grad)
                gemm_nt(b->values.data(), self.grad.data(), a->grad.data(), m, n, k);
            if (b->requires_grad)
                gemm_nn(a->values.data(), self.grad.data(), b->grad.data(), m, k, n);
        });
    }
    return out;
}

TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b) {
    require_matrix("concat_cols", *a);
    require_matrix("concat_cols", *b);
    if (a->rows() != b->rows()) {
        throw std::invalid_argument("concat_cols: shape mismatch " + a->shape_str() + " vs " +
                                    b->shape_str());
    }
    std::size_t r = a->rows(), ca = a->cols(), cb = b->cols();
    auto out = Tensor::create({r, ca + cb});
    for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(a->values.data() + i * ca, ca, out->values.data() + i * (ca + cb));
        std::copy_n(b->values.data() + i * cb, cb, out->values.data() + i * (ca + cb) + ca);
    }
    if (track({a, b})) {
        record(out, {a, b}, [a, b, r, ca, cb](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i) {
                const real* g = self.grad.data() + i * (ca + cb);
                if (a->requires_grad)
                    for (std::size_t j = 0; j < ca; ++j) a->grad[i * ca + j] += g[j];
                if (b->requires_grad)
                    for (std::size_t j = 0; j < cb; ++j) b->grad[i * cb + j] += g[ca + j];
            }
        });
    }
    return out;
}

TensorPtr add_rowvec(const TensorPtr& a, const TensorPtr& v) {
    require_matrix("add_rowvec", *a);
    if (v->size() != a->cols()) {
        throw std::invalid_argument("add_rowvec: shape mismatch " + a->shape_str() + " vs " +
                                    v->shape_str());
    }
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out->values[i * c + j] = a->values[i * c + j] + v->values[j];
    if (track({a, v})) {
        record(out, {a, v}, [a, v, r, c](const Tensor& self) {
            if (a->requires_grad)
                for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
            if (v->requires_grad)
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) v->grad[j] += self.grad[i * c + j];
        });
    }
    return out;
}

TensorPtr gather_rows(const TensorPtr& table, const std::vector<std::uint32_t>& idx) {
    require_matrix("gather_rows", *table);
    std::size_t d = table->cols();
    for (std::uint32_t i : idx) {
        if (i >= table->rows()) {
            throw std::invalid_argument("gather_rows: index " + std::to_string(i) +
                                        " out of range for " + table->shape_str());
        }
    }
    auto out = Tensor::create({idx.size(), d});
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(table->values.data() + std::size_t(idx[r]) * d, d, out->values.data() + r * d);
    if (track({table})) {
        record(out, {table}, [table, idx, d](const Tensor& self) {
            for (std::size_t r = 0; r < idx.size(); ++r) {
                real* dst = table->grad.data() + std::size_t(idx[r]) * d;
                const real* g = self.grad.data() + r * d;
                for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
            }
        });
    }
    return out;
}

TensorPtr leaky_relu(const TensorPtr& a, real slope) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) {
        real x = a->values[i];
        out->values[i] = x > real(0) ? x : slope * x;
    }
    if (track({a})) {
        record(out, {a}, [a, slope](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i)
                a->grad[i] += self.grad[i] * (a->values[i] > real(0) ? real(1) : slope);
        });
    }
    return out;
}

TensorPtr sigmoid(const TensorPtr& a) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = stable_sigmoid(a->values[i]);
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get()](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i) {
                real y = out_raw->values[i];
                a->grad[i] += self.grad[i] * y * (real(1) - y);
            }
        });
    }
    return out;
}

TensorPtr exp(const TensorPtr& a) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = std::exp(a->values[i]);
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get()](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i)
                a->grad[i] += self.grad[i] * out_raw->values[i];
        });
    }
    return out;
}

TensorPtr log(const TensorPtr& a) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i)
        out->values[i] = std::log(std::max(a->values[i], kLogClamp));
    if (track({a})) {
        record(out, {a}, [a](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i) {
                if (a->values[i] > kLogClamp) a->grad[i] += self.grad[i] / a->values[i];
            }
        });
    }
    return out;
}

TensorPtr softplus(const TensorPtr& a) {
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) {
        real x = a->values[i];
        out->values[i] = std::max(x, real(0)) + std::log1p(std::exp(-std::abs(x)));
    }
    if (track({a})) {
        record(out, {a}, [a](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i)
                a->grad[i] += self.grad[i] * stable_sigmoid(a->values[i]);
        });
    }
    return out;
}

TensorPtr softmax_rows(const TensorPtr& a) {
    require_matrix("softmax_rows", *a);
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const real* x = a->values.data() + i * c;
        real* y = out->values.data() + i * c;
        real mx = *std::max_element(x, x + c);
        real denom = real(0);
        for (std::size_t j = 0; j < c; ++j) {
            y[j] = std::exp(x[j] - mx);
            denom += y[j];
        }
        for (std::size_t j = 0; j < c; ++j) y[j] /= denom;
    }
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get(), r, c](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i) {
                const real* y = out_raw->values.data() + i * c;
                const real* g = self.grad.data() + i * c;
                real dot = real(0);
                for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                for (std::size_t j = 0; j < c; ++j) a->grad[i * c + j] += y[j] * (g[j] - dot);
            }
        });
    }
    return out;
}

TensorPtr log_softmax_rows(const TensorPtr& a) {
    require_matrix("log_softmax_rows", *a);
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const real* x = a->values.data() + i * c;
        real* y = out->values.data() + i * c;
        real mx = *std::max_element(x, x + c);
        real denom = real(0);
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(x[j] - mx);
        real lse = mx + std::log(denom);
        for (std::size_t j = 0; j < c; ++j) y[j] = x[j] - lse;
    }
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get(), r, c](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i) {
                const real* y = out_raw->values.data() + i * c;
                const real* g = self.grad.data() + i * c;
                real gsum = real(0);
                for (std::size_t j = 0; j < c; ++j) gsum += g[j];
                for (std::size_t j = 0; j < c; ++j)
                    a->grad[i * c + j] += g[j] - std::exp(y[j]) * gsum;
            }
        });
    }
    return out;
}

TensorPtr row_l2_normalize(const TensorPtr& a, real eps) {
    require_matrix("row_l2_normalize", *a);
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, c});
    std::vector<real> norms(r);
    for (std::size_t i = 0; i < r; ++i) {
        const real* x = a->values.data() + i * c;
        real s = real(0);
        for (std::size_t j = 0; j < c; ++j) s += x[j] * x[j];
        norms[i] = std::sqrt(s);
        real denom = std::max(norms[i], eps);
        for (std::size_t j = 0; j < c; ++j) out->values[i * c + j] = x[j] / denom;
    }
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get(), norms, eps, r, c](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i) {
                const real* y = out_raw->values.data() + i * c;
                const real* g = self.grad.data() + i * c;
                if (norms[i] > eps) {
                    real dot = real(0);
                    for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                    for (std::size_t j = 0; j < c; ++j)
                        a->grad[i * c + j] += (g[j] - y[j] * dot) / norms[i];
                } else {
                    for (std::size_t j = 0; j < c; ++j) a->grad[i * c + j] += g[j] / eps;
                }
            }
        });
    }
    return out;
}

TensorPtr row_sum_normalize(const TensorPtr& a, real eps) {
    require_matrix("row_sum_normalize", *a);
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, c});
    std::vector<real> sums(r);
    for (std::size_t i = 0; i < r; ++i) {
        const real* x = a->values.data() + i * c;
        real s = real(0);
        for (std::size_t j = 0; j < c; ++j) s += x[j];
        sums[i] = s;
        real denom = std::max(s, eps);
        for (std::size_t j = 0; j < c; ++j) out->values[i * c + j] = x[j] / denom;
    }
    if (track({a})) {
        record(out, {a}, [a, out_raw = out.get(), sums, eps, r, c](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i) {
                const real* y = out_raw->values.data() + i * c;
                const real* g = self.grad.data() + i * c;
                if (sums[i] > eps) {
                    real dot = real(0);
                    for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                    for (std::size_t j = 0; j < c; ++j)
                        a->grad[i * c + j] += (g[j] - dot) / sums[i];
                } else {
                    for (std::size_t j = 0; j < c; ++j) a->grad[i * c + j] += g[j] / eps;
                }
            }
        });
    }
    return out;
}

TensorPtr row_sum(const TensorPtr& a) {
    require_matrix("row_sum", *a);
    std::size_t r = a->rows(), c = a->cols();
    auto out = Tensor::create({r, 1});
    for (std::size_t i = 0; i < r; ++i) {
        real s = real(0);
        for (std::size_t j = 0; j < c; ++j) s += a->values[i * c + j];
        out->values[i] = s;
    }
    if (track({a})) {
        record(out, {a}, [a, r, c](const Tensor& self) {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) a->grad[i * c + j] += self.grad[i];
        });
    }
    return out;
}

TensorPtr dropout(const TensorPtr& a, real rate, Rng& rng) {
    if (rate < real(0) || rate >= real(1)) {
        throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    if (rate == real(0)) return a;
    real keep = real(1) - rate;
    auto mask = std::make_shared<std::vector<real>>(a->size());
    for (std::size_t i = 0; i < a->size(); ++i)
        (*mask)[i] = rng.bernoulli(keep) ? real(1) / keep : real(0);
    auto out = Tensor::create(a->shape);
    for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * (*mask)[i];
    if (track({a})) {
        record(out, {a}, [a, mask](const Tensor& self) {
            for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * (*mask)[i];
        });
    }
    return out;
}

TensorPtr sum_all(const TensorPtr& a) {
    real s = real(0);
    for (real x : a->values) s += x;
    auto out = Tensor::scalar(s);
    if (track({a})) {
        record(out, {a}, [a](const Tensor& self) {
            for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += self.grad[0];
        });
    }
    return out;
}

TensorPtr mean_all(const TensorPtr& a) {
    if (a->size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    real inv = real(1) / real(a->size());
    real s = real(0);
    for (real x : a->values) s += x;
    auto out = Tensor::scalar(s * inv);
    if (track({a})) {
        record(out, {a}, [a, inv](const Tensor& self) {
            for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += self.grad[0] * inv;
        });
    }
    return out;
}

TensorPtr sum_sq(const TensorPtr& a) {
    real s = real(0);
    for (real x : a->values) s += x * x;
    auto out = Tensor::scalar(s);
    if (track({a})) {
        record(out, {a}, [a](const Tensor& self) {
            for (std::size_t i = 0; i < a->size(); ++i)
                a->grad[i] += self.grad[0] * real(2) * a->values[i];
        });
    }
    return out;
}

TensorPtr trace(const TensorPtr& a) {
    require_matrix("trace", *a);
    if (a->rows() != a->cols()) {
        throw std::invalid_argument("trace: matrix not square, shape " + a->shape_str());
    }
    std::size_t n = a->rows();
    real s = real(0);
    for (std::size_t i = 0; i < n; ++i) s += a->values[i * n + i];
    auto out = Tensor::scalar(s);
    if (track({a})) {
        record(out, {a}, [a, n](const Tensor& self) {
            for (std::size_t i = 0; i < n; ++i) a->grad[i * n + i] += self.grad[0];
        });
    }
    return out;
}

TensorPtr squared_error(const TensorPtr& a, const TensorPtr& b) { return sum_sq(sub(a, b)); }

TensorPtr segment_softmax(const TensorPtr& logits, const std::vector<std::uint32_t>& seg,
                          std::size_t n_seg) {
    if (logits->size() != seg.size()) {
        throw std::invalid_argument("segment_softmax: " + std::to_string(seg.size()) +
                                    " segment ids vs logits " + logits->shape_str());
    }
    std::size_t m = seg.size();
    for (std::uint32_t s : seg) {
        if (s >= n_seg) throw std::invalid_argument("segment_softmax: segment id out of range");
    }
    std::vector<real> mx(n_seg, -std::numeric_limits<real>::infinity());
    for (std::size_t e = 0; e < m; ++e) mx[seg[e]] = std::max(mx[seg[e]], logits->values[e]);
    auto out = Tensor::create(logits->shape);
    std::vector<real> denom(n_seg, real(0));
    for (std::size_t e = 0; e < m; ++e) {
        out->values[e] = std::exp(logits->values[e] - mx[seg[e]]);
        denom[seg[e]] += out->values[e];
    }
    for (std::size_t e = 0; e < m; ++e) out->values[e] /= denom[seg[e]];
    if (track({logits})) {
        record(out, {logits}, [logits, out_raw = out.get(), seg, n_seg, m](const Tensor& self) {
            std::vector<real> dot(n_seg, real(0));
            for (std::size_t e = 0; e < m; ++e) dot[seg[e]] += self.grad[e] * out_raw->values[e];
            for (std::size_t e = 0; e < m; ++e)
                logits->grad[e] += out_raw->values[e] * (self.grad[e] - dot[seg[e]]);
        });
    }
    return out;
}

TensorPtr segment_weighted_rowsum(const TensorPtr& weights, const TensorPtr& rows,
                                  const std::vector<std::uint32_t>& seg, std::size_t n_seg) {
    require_matrix("segment_weighted_rowsum", *rows);
    std::size_t m = rows->rows(), d = rows->cols();
    if (weights->size() != m || seg.size() != m) {
        throw std::invalid_argument("segment_weighted_rowsum: weights " + weights->shape_str() +
                                    " vs rows " + rows->shape_str());
    }
    for (std::uint32_t s : seg) {
        if (s >= n_seg) throw std::invalid_argument("segment_weighted_rowsum: segment id out of range");
    }
    auto out = Tensor::create({n_seg, d});
    for (std::size_t e = 0; e < m; ++e) {
        real w = weights->values[e];
        const real* src = rows->values.data() + e * d;
        real* dst = out->values.data() + std::size_t(seg[e]) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
    if (track({weights, rows})) {
        record(out, {weights, rows}, [weights, rows, seg, d, m](const Tensor& self) {
            for (std::size_t e = 0; e < m; ++e) {
                const real* g = self.grad.data() + std::size_t(seg[e]) * d;
                const real* src = rows->values.data() + e * d;
                if (weights->requires_grad) {
                    real acc = real(0);
                    for (std::size_t j = 0; j < d; ++j) acc += g[j] * src[j];
                    weights->grad[e] += acc;
                }
                if (rows->requires_grad) {
                    real w = weights->values[e];
                    real* dst = rows->grad.data() + e * d;
                    for (std::size_t j = 0; j < d; ++j) dst[j] += w * g[j];
                }
            }
        });
    }
    return out;
}

namespace {
void csr_matmul(const Csr& A, const real* X, real* Y, std::size_t d) {
    // Y(A.rows x d) += A · X(A.cols x d)
    for (std::size_t r = 0; r < A.rows; ++r) {
        real* dst = Y + r * d;
        for (std::uint32_t k = A.ptr[r]; k < A.ptr[r + 1]; ++k) {
            real v = A.val[k];
            const real* src = X + std::size_t(A.idx[k]) * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += v * src[j];
        }
    }
}
}  // namespace

TensorPtr spmm(const SpMatPtr& A, const TensorPtr& x, bool transpose) {
    require_matrix("spmm", *x);
    const Csr& fwd = transpose ? A->at : A->a;
    if (x->rows() != fwd.cols) {
        throw std::invalid_argument("spmm: sparse [" + std::to_string(fwd.rows) + "," +
                                    std::to_string(fwd.cols) + "] vs dense " + x->shape_str());
    }
    std::size_t d = x->cols();
    auto out = Tensor::create({fwd.rows, d});
    csr_matmul(fwd, x->values.data(), out->values.data(), d);
    if (track({x})) {
        record(out, {x}, [A, x, transpose, d](const Tensor& self) {
            const Csr& bwd = transpose ? A->a : A->at;
            csr_matmul(bwd, self.grad.data(), x->grad.data(), d);
        });
    }
    return out;
}

}  // namespace diffkg
