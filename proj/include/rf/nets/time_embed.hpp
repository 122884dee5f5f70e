#pragma once

#include <cstdint>
#include <vector>

#include "rf/tensor/tensor.hpp"

namespace rf {

// Sinusoidal timestep features at geometric frequencies: half sine, half
// cosine, angular rates from 1 up to `base`. Entries stay within [-1, 1] and
// the map is smooth for any finite t, including solver overshoot outside
// [0, 1].
struct TimeEmbedding {
    int64_t dim = 64;     // even
    double base = 1000.0; // highest angular rate

    std::vector<double> embed(double t) const;

    // Stacks embeddings for a batch of timesteps into an [N, dim] tensor.
    Tensor embed_batch(const std::vector<double>& ts) const;
};

}  // namespace rf
