#pragma once

#include <string>

#include "rf/nets/window.hpp"
#include "rf/tensor/ops.hpp"
#include "rf/tensor/params.hpp"

namespace rf {

// Dense layer over the trailing axis. Weights live in the owning ParamMap.
struct Linear {
    Tensor w;  // [in, out]
    Tensor b;  // [out]

    static Linear make(ParamMap& params, const std::string& name, int64_t in, int64_t out,
                       Rng& rng, bool zero_init = false);

    // x [..., in] -> [..., out]
    Tensor apply(const Tensor& x) const;
};

// RMS normalization over the trailing axis with a learnable gain.
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps = 1e-6);

// Per-position convex-style blend of skip and current token grids:
// w (per channel) * skip + (1 - w) * current.
Tensor skip_fusion(const Tensor& current, const Tensor& skip, const Tensor& w);

// Multi-head self-attention over a token grid [T, C]. Rotary phases
// (cos_v/sin_v, [T, C/2]) are applied to queries and keys. With a window
// table each token attends to its neighborhood; without one attention is
// global. repeat_idx must map t*n+j -> t for the window's neighborhood
// size n (precomputed by the caller).
struct AttentionWeights {
    Linear qkv;  // C -> 3C
    Linear out;  // C -> C, zero-initialized

    static AttentionWeights make(ParamMap& params, const std::string& name, int64_t channels,
                                 Rng& rng);
};

Tensor attention(const AttentionWeights& w, const Tensor& tokens, int64_t heads,
                 const Tensor& cos_v, const Tensor& sin_v,
                 const WindowIndices* window = nullptr,
                 const std::vector<int64_t>* repeat_idx = nullptr);

// Patch embedding between a [ch, H, W] image and [H*(W/pw), ch*pw] tokens;
// patchify/unpatchify are exact inverse permutations.
struct PatchLayout {
    int64_t channels, height, width, patch_w;
    std::vector<int64_t> to_tokens;   // token-major gather indices
    std::vector<int64_t> to_pixels;   // inverse

    static PatchLayout make(int64_t channels, int64_t height, int64_t width, int64_t patch_w);
    int64_t tokens() const { return height * (width / patch_w); }
    int64_t token_dim() const { return channels * patch_w; }
};

Tensor patchify(const PatchLayout& pl, const Tensor& image);
Tensor unpatchify(const PatchLayout& pl, const Tensor& tokens);

}  // namespace rf
