#include "rf/nets/time_embed.hpp"

#include <cmath>

#include "rf/core/error.hpp"

namespace rf {

std::vector<double> TimeEmbedding::embed(double t) const {
    if (dim < 2 || dim % 2 != 0) {
        throw UsageError("time embedding dimension must be even and >= 2, got " +
                         std::to_string(dim));
    }
    if (!std::isfinite(t)) throw UsageError("time embedding: non-finite t");
    const int64_t half = dim / 2;
    std::vector<double> out(static_cast<size_t>(dim));
    for (int64_t i = 0; i < half; ++i) {
        const double expo = half > 1 ? static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
        const double omega = std::pow(base, expo);  // geometric from 1 to base
        out[static_cast<size_t>(i)] = std::sin(omega * t);
        out[static_cast<size_t>(half + i)] = std::cos(omega * t);
    }
    return out;
}

Tensor TimeEmbedding::embed_batch(const std::vector<double>& ts) const {
    std::vector<double> data;
    data.reserve(ts.size() * static_cast<size_t>(dim));
    for (double t : ts) {
        auto e = embed(t);
        data.insert(data.end(), e.begin(), e.end());
    }
    return Tensor::from({static_cast<int64_t>(ts.size()), dim}, std::move(data));
}

}  // namespace rf
