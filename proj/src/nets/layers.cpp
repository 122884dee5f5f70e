#include "rf/nets/layers.hpp"

#include <cmath>

namespace rf {

Linear Linear::make(ParamMap& params, const std::string& name, int64_t in, int64_t out,
                    Rng& rng, bool zero_init) {
    Linear l;
    if (zero_init) {
        l.w = params.add(name + ".w", Tensor::zeros({in, out}));
    } else {
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        l.w = params.add(name + ".w", Tensor::uniform({in, out}, rng, -bound, bound));
    }
    l.b = params.add(name + ".b", Tensor::zeros({out}));
    return l;
}

Tensor Linear::apply(const Tensor& x) const {
    const int64_t in = w.shape()[0];
    const int64_t out = w.shape()[1];
    if (x.shape().back() != in) {
        throw ShapeError("linear: input width " + shape_str(x.shape()) + " does not match " +
                         shape_str(w.shape()));
    }
    const int64_t rows = x.numel() / in;
    Tensor flat = x.rank() == 2 ? x : reshape(x, {rows, in});
    Tensor y = add_rowwise(matmul(flat, w), b);
    if (x.rank() == 2) return y;
    Shape out_shape = x.shape();
    out_shape.back() = out;
    return reshape(y, std::move(out_shape));
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps) {
    Tensor ms = reduce_mean(mul(x, x), x.rank() - 1, true);
    Tensor denom = rf::sqrt(affine(ms, 1.0, eps));
    return mul_rowwise(div(x, denom), gain);
}

Tensor skip_fusion(const Tensor& current, const Tensor& skip, const Tensor& w) {
    if (current.shape() != skip.shape()) {
        throw ShapeError("skip_fusion: shape mismatch " + shape_str(current.shape()) + " vs " +
                         shape_str(skip.shape()));
    }
    if (w.rank() != 1 || w.shape()[0] != current.shape().back()) {
        throw ShapeError("skip_fusion: weight shape " + shape_str(w.shape()) +
                         " does not match channel width of " + shape_str(current.shape()));
    }
    Tensor one_minus_w = affine(w, -1.0, 1.0);
    return add(mul_rowwise(skip, w), mul_rowwise(current, one_minus_w));
}

AttentionWeights AttentionWeights::make(ParamMap& params, const std::string& name,
                                        int64_t channels, Rng& rng) {
    AttentionWeights a;
    a.qkv = Linear::make(params, name + ".qkv", channels, 3 * channels, rng);
    a.out = Linear::make(params, name + ".out", channels, channels, rng, /*zero_init=*/true);
    return a;
}

Tensor attention(const AttentionWeights& w, const Tensor& tokens, int64_t heads,
                 const Tensor& cos_v, const Tensor& sin_v, const WindowIndices* window,
                 const std::vector<int64_t>* repeat_idx) {
    if (tokens.rank() != 2) {
        throw ShapeError("attention: tokens must be [T, C], got " + shape_str(tokens.shape()));
    }
    const int64_t T = tokens.shape()[0];
    const int64_t C = tokens.shape()[1];
    if (C % heads != 0) throw UsageError("attention: channels not divisible by heads");
    const int64_t hd = C / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Tensor qkv = w.qkv.apply(tokens);
    Tensor q = rope_rotate(slice(qkv, 1, 0, C), cos_v, sin_v);
    Tensor k = rope_rotate(slice(qkv, 1, C, C), cos_v, sin_v);
    Tensor v = slice(qkv, 1, 2 * C, C);

    std::vector<Tensor> head_outs;
    head_outs.reserve(static_cast<size_t>(heads));
    if (window != nullptr) {
        const int64_t n = window->neighborhood();
        if (window->tokens() != T || repeat_idx == nullptr) {
            throw UsageError("attention: window table does not match token grid");
        }
        Tensor k_g = gather_rows(k, window->idx);
        Tensor v_g = gather_rows(v, window->idx);
        Tensor q_r = gather_rows(q, *repeat_idx);
        for (int64_t h = 0; h < heads; ++h) {
            Tensor kh = reshape(slice(k_g, 1, h * hd, hd), {T, n, hd});
            Tensor vh = reshape(slice(v_g, 1, h * hd, hd), {T, n, hd});
            Tensor qh = reshape(slice(q_r, 1, h * hd, hd), {T, n, hd});
            Tensor scores = affine(reduce_sum(mul(qh, kh), 2, false), scale, 0.0);
            Tensor attn = reshape(softmax(scores, 1), {T, n, 1});
            head_outs.push_back(reduce_sum(mul(vh, attn), 1, false));
        }
    } else {
        for (int64_t h = 0; h < heads; ++h) {
            Tensor qh = slice(q, 1, h * hd, hd);
            Tensor kh = slice(k, 1, h * hd, hd);
            Tensor vh = slice(v, 1, h * hd, hd);
            Tensor scores = affine(matmul(qh, transpose2d(kh)), scale, 0.0);
            Tensor attn = softmax(scores, 1);
            head_outs.push_back(matmul(attn, vh));
        }
    }
    Tensor merged = heads == 1 ? head_outs[0] : concat(head_outs, 1);
    return w.out.apply(merged);
}

PatchLayout PatchLayout::make(int64_t channels, int64_t height, int64_t width, int64_t patch_w) {
    if (width % patch_w != 0) {
        throw UsageError("patchify: width " + std::to_string(width) +
                         " not divisible by patch width " + std::to_string(patch_w));
    }
    PatchLayout pl;
    pl.channels = channels;
    pl.height = height;
    pl.width = width;
    pl.patch_w = patch_w;
    const int64_t wc = width / patch_w;
    pl.to_tokens.resize(static_cast<size_t>(channels * height * width));
    pl.to_pixels.resize(pl.to_tokens.size());
    int64_t t = 0;
    for (int64_t r = 0; r < height; ++r) {
        for (int64_t c = 0; c < wc; ++c) {
            for (int64_t ch = 0; ch < channels; ++ch) {
                for (int64_t dx = 0; dx < patch_w; ++dx) {
                    const int64_t pixel = ch * height * width + r * width + c * patch_w + dx;
                    pl.to_tokens[static_cast<size_t>(t)] = pixel;
                    pl.to_pixels[static_cast<size_t>(pixel)] = t;
                    ++t;
                }
            }
        }
    }
    return pl;
}

Tensor patchify(const PatchLayout& pl, const Tensor& image) {
    const Shape want{pl.channels, pl.height, pl.width};
    if (image.shape() != want) {
        throw ShapeError("patchify: expected image " + shape_str(want) + ", got " +
                         shape_str(image.shape()));
    }
    Tensor flat = reshape(image, {image.numel()});
    return reshape(gather_rows(flat, pl.to_tokens), {pl.tokens(), pl.token_dim()});
}

Tensor unpatchify(const PatchLayout& pl, const Tensor& tokens) {
    const Shape want{pl.tokens(), pl.token_dim()};
    if (tokens.shape() != want) {
        throw ShapeError("unpatchify: expected tokens " + shape_str(want) + ", got " +
                         shape_str(tokens.shape()));
    }
    Tensor flat = reshape(tokens, {tokens.numel()});
    return reshape(gather_rows(flat, pl.to_pixels), {pl.channels, pl.height, pl.width});
}

}  // namespace rf
