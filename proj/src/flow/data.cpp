#include "rf/flow/data.hpp"

#include <cmath>

#include "rf/core/error.hpp"
#include "rf/tensor/ops.hpp"

namespace rf {

Tensor EightGaussians::draw(int64_t n, Rng& rng) const {
    std::vector<double> data(static_cast<size_t>(2 * n));
    for (int64_t i = 0; i < n; ++i) {
        const auto mode = rng.uniform_int(8);
        const double angle = 2.0 * M_PI * static_cast<double>(mode) / 8.0;
        data[static_cast<size_t>(2 * i)] = radius_ * std::cos(angle) + sigma_ * rng.normal();
        data[static_cast<size_t>(2 * i + 1)] = radius_ * std::sin(angle) + sigma_ * rng.normal();
    }
    return Tensor::from({n, 2}, std::move(data));
}

Tensor GaussianSource::draw(int64_t n, Rng& rng) const {
    Shape s = shape_;
    s.insert(s.begin(), n);
    return Tensor::randn(s, rng);
}

Tensor PointMassSource::draw(int64_t n, Rng&) const {
    const auto d = static_cast<int64_t>(point_.size());
    std::vector<double> data(static_cast<size_t>(n * d));
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) data[static_cast<size_t>(i * d + j)] = point_[static_cast<size_t>(j)];
    return Tensor::from({n, d}, std::move(data));
}

TensorDataset::TensorDataset(Tensor samples) : samples_(std::move(samples)) {
    if (samples_.rank() < 2) {
        throw UsageError("tensor dataset needs at least [M, d] samples");
    }
    shape_.assign(samples_.shape().begin() + 1, samples_.shape().end());
}

Tensor TensorDataset::draw(int64_t n, Rng& rng) const {
    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (auto& i : idx) i = rng.uniform_int(samples_.shape()[0]);
    NoGradGuard ng;
    return gather_rows(samples_, idx);
}

}  // namespace rf
