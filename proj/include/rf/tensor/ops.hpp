#pragma once

#include <span>
#include <vector>

#include "rf/tensor/tensor.hpp"

namespace rf {

// Forward primitives. Each op validates shapes, computes the result, and
// records a backward rule on the active tape when gradient tracking is on.
// Elementwise binary ops accept equal shapes; mul/div additionally allow the
// right operand to broadcast along trailing singleton axes.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// a*x + b, elementwise with scalar coefficients.
Tensor affine(const Tensor& x, double a, double b);

// Adds / scales each trailing-axis row by a vector of matching width.
Tensor add_rowwise(const Tensor& x, const Tensor& bias);
Tensor mul_rowwise(const Tensor& x, const Tensor& scale);

Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K] x [K,N]
Tensor transpose2d(const Tensor& a);

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t len);

Tensor reduce_sum(const Tensor& x);                                // all -> scalar
Tensor reduce_sum(const Tensor& x, int64_t axis, bool keepdim);    // one axis
Tensor reduce_mean(const Tensor& x);
Tensor reduce_mean(const Tensor& x, int64_t axis, bool keepdim);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);   // rejects non-positive input
Tensor sqrt(const Tensor& x);  // rejects negative input
Tensor tanh(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

Tensor softmax(const Tensor& x, int64_t axis);

// Row gather along axis 0: x [N, rest...] -> [idx.size(), rest...].
Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& idx);

// Rotary phase application: channels of x are (even, odd) pairs rotated by
// per-position angles; cos/sin carry cos(phi), sin(phi) per pair and are
// treated as constants.
Tensor rope_rotate(const Tensor& x, const Tensor& cos_v, const Tensor& sin_v);

bool all_finite(const Tensor& x);

}  // namespace rf
