#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rf/nets/layers.hpp"
#include "rf/nets/time_embed.hpp"
#include "rf/nets/velocity_model.hpp"

namespace rf {

enum class Activation { Tanh, Gelu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct MlpConfig {
    int64_t data_dim = 2;
    std::vector<int64_t> hidden = {64, 64};
    Activation activation = Activation::Tanh;
    int64_t time_dim = 32;
    double time_base = 1000.0;
    uint64_t init_seed = 1;
};

// Toy velocity estimator: concat(x, time features) through a small MLP.
// The output layer is zero-initialized, so a fresh model is the zero field.
class MlpVelocity : public VelocityModel {
public:
    explicit MlpVelocity(MlpConfig cfg);

    const Shape& sample_shape() const override { return shape_; }
    Tensor forward(const Tensor& x, const std::vector<double>& ts) override;
    ParamMap& params() override { return params_; }
    const MlpConfig& config() const { return cfg_; }

private:
    MlpConfig cfg_;
    Shape shape_;
    TimeEmbedding temb_;
    std::vector<Linear> hidden_;
    Linear out_;
    ParamMap params_;
};

}  // namespace rf
