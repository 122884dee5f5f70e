#include "rf/tensor/adam.hpp"

#include <cmath>

#include "rf/core/error.hpp"

namespace rf {

void Adam::step(ParamMap& params) {
    // Validate every gradient before mutating anything.
    for (auto& [name, p] : params) {
        if (!p.has_grad()) {
            throw UsageError("adam: parameter '" + name + "' has no gradient");
        }
        for (double g : p.grad()) {
            if (!std::isfinite(g)) {
                throw NumericalError("adam: non-finite gradient in parameter '" + name + "'");
            }
        }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (auto& [name, p] : params) {
        auto& mom = state_[name];
        const auto n = static_cast<size_t>(p.numel());
        if (mom.m.empty()) {
            mom.m.assign(n, 0.0);
            mom.v.assign(n, 0.0);
        }
        auto g = p.grad();
        auto x = p.mut_data();
        for (size_t i = 0; i < n; ++i) {
            mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
            mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = mom.m[i] / bc1;
            const double vhat = mom.v[i] / bc2;
            x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace rf
