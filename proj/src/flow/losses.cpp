#include "rf/flow/losses.hpp"

#include <cmath>

namespace rf {

namespace {

void check_pair(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

// Per-sample broadcast factor [N,1,...,1] matching x's rank.
Tensor per_sample(const std::vector<double>& vals, const Shape& like) {
    Shape s(like.size(), 1);
    s[0] = static_cast<int64_t>(vals.size());
    return Tensor::from(std::move(s), std::vector<double>(vals));
}

// Mean over the batch of per-sample squared residual norms.
Tensor batch_sq_norms(const Tensor& r) {
    const int64_t n = r.shape()[0];
    const int64_t d = r.numel() / n;
    Tensor flat = reshape(mul(r, r), {n, d});
    return reduce_sum(flat, 1, false);  // [N]
}

}  // namespace

Tensor interpolate_state(const Tensor& x0, const Tensor& x1, double t) {
    check_pair("interpolate_state", x0, x1);
    return add(affine(x1, t, 0.0), affine(x0, 1.0 - t, 0.0));
}

Tensor interpolate_state(const Tensor& x0, const Tensor& x1, const std::vector<double>& ts) {
    check_pair("interpolate_state", x0, x1);
    if (static_cast<int64_t>(ts.size()) != x0.shape()[0]) {
        throw ShapeError("interpolate_state: " + std::to_string(ts.size()) +
                         " timesteps for batch of " + std::to_string(x0.shape()[0]));
    }
    Tensor tv = per_sample(ts, x0.shape());
    std::vector<double> om(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) om[i] = 1.0 - ts[i];
    Tensor omv = per_sample(om, x0.shape());
    return add(mul(x1, tv), mul(x0, omv));
}

Tensor cfm_loss(const Tensor& v_pred, const Tensor& x0, const Tensor& x1) {
    check_pair("cfm_loss", x0, x1);
    check_pair("cfm_loss", v_pred, x1);
    Tensor r = sub(sub(x1, x0), v_pred);
    return reduce_mean(batch_sq_norms(r));
}

double pseudo_huber_c(int64_t d) {
    if (d <= 0) throw UsageError("pseudo-huber: sample dimension must be positive");
    return 0.00054 * std::sqrt(static_cast<double>(d));
}

Tensor pseudo_huber_loss(const Tensor& v_pred, const Tensor& x0, const Tensor& x1, int64_t d) {
    check_pair("pseudo_huber_loss", x0, x1);
    check_pair("pseudo_huber_loss", v_pred, x1);
    const double c = pseudo_huber_c(d);
    Tensor r = sub(sub(x1, x0), v_pred);
    Tensor sq = batch_sq_norms(r);                       // [N]
    Tensor root = rf::sqrt(affine(sq, 1.0, c * c));      // sqrt(||r||^2 + c^2)
    return reduce_mean(affine(root, 1.0, -c));
}

}  // namespace rf
