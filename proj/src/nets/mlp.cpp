#include "rf/nets/mlp.hpp"

namespace rf {

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "gelu") return Activation::Gelu;
    throw UsageError("unknown activation: " + s);
}

std::string to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "gelu";
}

MlpVelocity::MlpVelocity(MlpConfig cfg)
    : cfg_(std::move(cfg)), shape_{cfg_.data_dim}, temb_{cfg_.time_dim, cfg_.time_base} {
    if (cfg_.data_dim < 1) throw UsageError("mlp: data_dim must be >= 1");
    Rng rng(cfg_.init_seed);
    int64_t in = cfg_.data_dim + cfg_.time_dim;
    for (size_t i = 0; i < cfg_.hidden.size(); ++i) {
        hidden_.push_back(
            Linear::make(params_, "fc" + std::to_string(i), in, cfg_.hidden[i], rng));
        in = cfg_.hidden[i];
    }
    out_ = Linear::make(params_, "out", in, cfg_.data_dim, rng, /*zero_init=*/true);
}

Tensor MlpVelocity::forward(const Tensor& x, const std::vector<double>& ts) {
    if (x.rank() != 2 || x.shape()[1] != cfg_.data_dim) {
        throw ShapeError("mlp forward: expected [N," + std::to_string(cfg_.data_dim) +
                         "], got " + shape_str(x.shape()));
    }
    if (static_cast<int64_t>(ts.size()) != x.shape()[0]) {
        throw ShapeError("mlp forward: batch size " + std::to_string(x.shape()[0]) +
                         " but " + std::to_string(ts.size()) + " timesteps");
    }
    Tensor h = concat({x, temb_.embed_batch(ts)}, 1);
    for (const auto& layer : hidden_) {
        Tensor z = layer.apply(h);
        h = cfg_.activation == Activation::Tanh ? rf::tanh(z) : gelu(z);
    }
    return out_.apply(h);
}

}  // namespace rf
