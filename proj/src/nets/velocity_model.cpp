#include "rf/nets/velocity_model.hpp"

namespace rf {

void VelocityModel::eval(std::span<const double> x, double t, std::span<double> out) {
    const int64_t n = sample_numel();
    if (static_cast<int64_t>(x.size()) != n || static_cast<int64_t>(out.size()) != n) {
        throw ShapeError("velocity eval: flat state size " + std::to_string(x.size()) +
                         " does not match sample size " + std::to_string(n));
    }
    NoGradGuard ng;
    Shape batched = sample_shape();
    batched.insert(batched.begin(), 1);
    Tensor xt = Tensor::from(std::move(batched), std::vector<double>(x.begin(), x.end()));
    Tensor v = forward(xt, {t});
    auto vd = v.data();
    std::copy(vd.begin(), vd.end(), out.begin());
}

}  // namespace rf
