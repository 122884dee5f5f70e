#pragma once

#include "rf/tensor/ops.hpp"

namespace rf {

// x_t = t*x1 + (1-t)*x0 along the straight interpolation path. Shapes must
// match; per-sample timesteps pair with axis 0.
Tensor interpolate_state(const Tensor& x0, const Tensor& x1, double t);
Tensor interpolate_state(const Tensor& x0, const Tensor& x1, const std::vector<double>& ts);

// Conditional flow matching loss: mean over the batch of the squared
// Euclidean norm of (x1 - x0) - v_pred.
Tensor cfm_loss(const Tensor& v_pred, const Tensor& x0, const Tensor& x1);

// Pseudo-Huber loss with c = 0.00054*sqrt(d), d = scalars per sample:
// mean over the batch of sqrt(||(x1-x0) - v_pred||^2 + c^2) - c.
Tensor pseudo_huber_loss(const Tensor& v_pred, const Tensor& x0, const Tensor& x1, int64_t d);

double pseudo_huber_c(int64_t d);

}  // namespace rf
