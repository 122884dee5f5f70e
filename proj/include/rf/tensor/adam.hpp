#pragma once

#include <map>
#include <string>
#include <vector>

#include "rf/tensor/params.hpp"

namespace rf {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. State lives here, keyed by parameter
// name; two optimizers never share state.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    int64_t step_count() const { return step_; }
    void set_lr(double lr) { cfg_.lr = lr; }

    // Applies one update from the gradients currently stored on the params.
    // A non-finite gradient rejects the whole step and reports the offending
    // parameter; no state is modified in that case.
    void step(ParamMap& params);

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Moments> state_;
    int64_t step_ = 0;
};

}  // namespace rf
