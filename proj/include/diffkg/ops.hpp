#pragma once

#include <cstdint>
#include <vector>

#include "diffkg/rng.hpp"
#include "diffkg/sparse.hpp"
#include "diffkg/tensor.hpp"

namespace diffkg {

// Elementwise and scalar ops. Shapes must match exactly where two tensors
// are combined; mismatches throw std::invalid_argument naming both shapes.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, real c);
TensorPtr add_scalar(const TensorPtr& a, real c);
TensorPtr neg(const TensorPtr& a);

// 2-D linear algebra.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // a·b
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // a·bᵀ
TensorPtr matmul_tn(const TensorPtr& a, const TensorPtr& b);  // aᵀ·b
TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
TensorPtr add_rowvec(const TensorPtr& a, const TensorPtr& v);  // v broadcast over rows

/// Rows of `table` selected by index; gradients scatter-add back.
TensorPtr gather_rows(const TensorPtr& table, const std::vector<std::uint32_t>& idx);

// Nonlinearities.
TensorPtr leaky_relu(const TensorPtr& a, real slope);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr exp(const TensorPtr& a);
TensorPtr log(const TensorPtr& a);  // input clamped at 1e-10
TensorPtr softplus(const TensorPtr& a);

// Row-wise transforms (2-D inputs).
TensorPtr softmax_rows(const TensorPtr& a);
TensorPtr log_softmax_rows(const TensorPtr& a);
TensorPtr row_l2_normalize(const TensorPtr& a, real eps = real(1e-8));
TensorPtr row_sum_normalize(const TensorPtr& a, real eps = real(1e-8));
TensorPtr row_sum(const TensorPtr& a);  // [r,c] -> [r,1]

/// Inverted-scaling dropout: survivors divided by 1-rate, so inference needs
/// no rescaling. rate == 0 is the identity.
TensorPtr dropout(const TensorPtr& a, real rate, Rng& rng);

// Reductions to scalar.
TensorPtr sum_all(const TensorPtr& a);
TensorPtr mean_all(const TensorPtr& a);
TensorPtr sum_sq(const TensorPtr& a);
TensorPtr trace(const TensorPtr& a);  // sum of diagonal of a square matrix
TensorPtr squared_error(const TensorPtr& a, const TensorPtr& b);  // sum((a-b)^2)

// Segment ops over an edge list grouped by `seg` (values in [0, n_seg)).
// Used for attention over variable-size neighbor sets.
TensorPtr segment_softmax(const TensorPtr& logits /*[m,1]*/,
                          const std::vector<std::uint32_t>& seg, std::size_t n_seg);
TensorPtr segment_weighted_rowsum(const TensorPtr& weights /*[m,1]*/,
                                  const TensorPtr& rows /*[m,d]*/,
                                  const std::vector<std::uint32_t>& seg, std::size_t n_seg);

/// Sparse·dense product; `transpose` multiplies by Aᵀ instead. The sparse
/// side is constant, gradients flow through the dense side only.
TensorPtr spmm(const SpMatPtr& A, const TensorPtr& x, bool transpose = false);

}  // namespace diffkg
