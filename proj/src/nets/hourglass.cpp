#include "rf/nets/hourglass.hpp"

namespace rf {

HourglassVelocity::Block HourglassVelocity::Block::make(ParamMap& params,
                                                        const std::string& name,
                                                        int64_t channels, int64_t time_dim,
                                                        int64_t ffn_width, Rng& rng) {
    Block b;
    b.norm1_gain = params.add(name + ".norm1.g", Tensor::full({channels}, 1.0));
    b.norm2_gain = params.add(name + ".norm2.g", Tensor::full({channels}, 1.0));
    // Zero-initialized modulation: a fresh block conditions on nothing.
    b.mod_scale1 = Linear::make(params, name + ".mod_s1", time_dim, channels, rng, true);
    b.mod_shift1 = Linear::make(params, name + ".mod_b1", time_dim, channels, rng, true);
    b.mod_scale2 = Linear::make(params, name + ".mod_s2", time_dim, channels, rng, true);
    b.mod_shift2 = Linear::make(params, name + ".mod_b2", time_dim, channels, rng, true);
    b.attn = AttentionWeights::make(params, name + ".attn", channels, rng);
    b.ffn1 = Linear::make(params, name + ".ffn1", channels, ffn_width, rng);
    b.ffn2 = Linear::make(params, name + ".ffn2", ffn_width, channels, rng, true);
    return b;
}

Tensor HourglassVelocity::Block::forward(const Tensor& tokens, const Tensor& temb,
                                         int64_t heads, const RopeTable& rope,
                                         const WindowIndices* window,
                                         const std::vector<int64_t>* repeat_idx) const {
    const int64_t c = tokens.shape()[1];
    Tensor s1 = reshape(mod_scale1.apply(temb), {c});
    Tensor b1 = reshape(mod_shift1.apply(temb), {c});
    Tensor h = rms_norm(tokens, norm1_gain);
    h = add_rowwise(mul_rowwise(h, affine(s1, 1.0, 1.0)), b1);
    Tensor x = add(tokens, attention(attn, h, heads, rope.cos_v, rope.sin_v, window, repeat_idx));

    Tensor s2 = reshape(mod_scale2.apply(temb), {c});
    Tensor b2 = reshape(mod_shift2.apply(temb), {c});
    Tensor h2 = rms_norm(x, norm2_gain);
    h2 = add_rowwise(mul_rowwise(h2, affine(s2, 1.0, 1.0)), b2);
    return add(x, ffn2.apply(gelu(ffn1.apply(h2))));
}

HourglassVelocity::HourglassVelocity(HourglassConfig cfg, BeamTable beams)
    : cfg_(cfg),
      beams_(std::move(beams)),
      shape_{cfg.channels, cfg.height, cfg.width},
      temb_{cfg.time_dim, cfg.time_base},
      patches_(PatchLayout::make(cfg.channels, cfg.height, cfg.width, cfg.patch_w)) {
    if (beams_.rows() != cfg_.height) {
        throw UsageError("hourglass: beam table has " + std::to_string(beams_.rows()) +
                         " rows but image height is " + std::to_string(cfg_.height));
    }
    if (cfg_.height % 2 != 0) throw UsageError("hourglass: height must be even for row merging");
    if (cfg_.head_dim % 4 != 0) throw UsageError("hourglass: head_dim must be a multiple of 4");
    if (cfg_.outer_width % cfg_.head_dim != 0 || cfg_.bottleneck_width % cfg_.head_dim != 0) {
        throw UsageError("hourglass: stage widths must be multiples of head_dim");
    }
    const int64_t wc = cfg_.width / cfg_.patch_w;
    window_ = circular_window_indices(cfg_.height, wc, cfg_.window_rows, cfg_.window_cols);
    repeat_idx_.resize(static_cast<size_t>(window_.tokens() * window_.neighborhood()));
    for (int64_t t = 0; t < window_.tokens(); ++t)
        for (int64_t j = 0; j < window_.neighborhood(); ++j)
            repeat_idx_[static_cast<size_t>(t * window_.neighborhood() + j)] = t;

    const int64_t rows = cfg_.height, half_rows = rows / 2;
    merge_idx_.resize(static_cast<size_t>(rows * wc));
    unmerge_idx_.resize(static_cast<size_t>(rows * wc));
    for (int64_t r2 = 0; r2 < half_rows; ++r2) {
        for (int64_t c = 0; c < wc; ++c) {
            for (int64_t j = 0; j < 2; ++j) {
                merge_idx_[static_cast<size_t>((r2 * wc + c) * 2 + j)] = (2 * r2 + j) * wc + c;
                unmerge_idx_[static_cast<size_t>((2 * r2 + j) * wc + c)] = (r2 * wc + c) * 2 + j;
            }
        }
    }

    const int64_t pairs = cfg_.head_dim / 2;
    rope_outer_ = rope_table(beams_, wc, pairs, cfg_.outer_width / cfg_.head_dim);
    rope_mid_ = rope_table(beams_.merged_pairs(), wc, pairs,
                           cfg_.bottleneck_width / cfg_.head_dim);

    Rng rng(cfg_.init_seed);
    const auto ffn_outer = static_cast<int64_t>(cfg_.ffn_mult * cfg_.outer_width);
    const auto ffn_mid = static_cast<int64_t>(cfg_.ffn_mult * cfg_.bottleneck_width);

    embed_ = Linear::make(params_, "embed", patches_.token_dim(), cfg_.outer_width, rng);
    time_map_ = Linear::make(params_, "time_map", cfg_.time_dim, cfg_.time_dim, rng);
    if (cfg_.use_ape) {
        ape_ = params_.add("ape", Tensor::zeros({window_.tokens(), cfg_.outer_width}));
    }
    for (int64_t i = 0; i < cfg_.outer_depth; ++i) {
        enc_.push_back(Block::make(params_, "enc" + std::to_string(i), cfg_.outer_width,
                                   cfg_.time_dim, ffn_outer, rng));
    }
    down_ = Linear::make(params_, "down", 2 * cfg_.outer_width, cfg_.bottleneck_width, rng);
    for (int64_t i = 0; i < cfg_.bottleneck_depth; ++i) {
        mid_.push_back(Block::make(params_, "mid" + std::to_string(i), cfg_.bottleneck_width,
                                   cfg_.time_dim, ffn_mid, rng));
    }
    up_ = Linear::make(params_, "up", cfg_.bottleneck_width, 2 * cfg_.outer_width, rng);
    fuse_w_ = params_.add("fuse.w", Tensor::full({cfg_.outer_width}, 0.5));
    for (int64_t i = 0; i < cfg_.outer_depth; ++i) {
        dec_.push_back(Block::make(params_, "dec" + std::to_string(i), cfg_.outer_width,
                                   cfg_.time_dim, ffn_outer, rng));
    }
    out_gain_ = params_.add("out_norm.g", Tensor::full({cfg_.outer_width}, 1.0));
    // Zero-initialized readout: a fresh model is the zero velocity field.
    out_proj_ = Linear::make(params_, "out", cfg_.outer_width, patches_.token_dim(), rng, true);
}

Tensor HourglassVelocity::forward_one(const Tensor& image, double t) {
    const int64_t wc = cfg_.width / cfg_.patch_w;
    const int64_t heads_outer = cfg_.outer_width / cfg_.head_dim;
    const int64_t heads_mid = cfg_.bottleneck_width / cfg_.head_dim;

    Tensor temb = Tensor::from({1, cfg_.time_dim}, temb_.embed(t));
    temb = gelu(time_map_.apply(temb));

    Tensor tok = embed_.apply(patchify(patches_, image));
    if (cfg_.use_ape) tok = add(tok, ape_);

    for (const auto& blk : enc_) {
        tok = blk.forward(tok, temb, heads_outer, rope_outer_, &window_, &repeat_idx_);
    }
    Tensor skip = tok;

    Tensor mid = reshape(gather_rows(tok, merge_idx_),
                         {cfg_.height / 2 * wc, 2 * cfg_.outer_width});
    mid = down_.apply(mid);
    for (const auto& blk : mid_) {
        mid = blk.forward(mid, temb, heads_mid, rope_mid_, nullptr, nullptr);
    }
    Tensor up = reshape(up_.apply(mid), {cfg_.height * wc, cfg_.outer_width});
    up = gather_rows(up, unmerge_idx_);

    tok = skip_fusion(up, skip, fuse_w_);
    for (const auto& blk : dec_) {
        tok = blk.forward(tok, temb, heads_outer, rope_outer_, &window_, &repeat_idx_);
    }
    return unpatchify(patches_, out_proj_.apply(rms_norm(tok, out_gain_)));
}

Tensor HourglassVelocity::forward(const Tensor& x, const std::vector<double>& ts) {
    if (x.rank() != 4 || x.shape()[1] != cfg_.channels || x.shape()[2] != cfg_.height ||
        x.shape()[3] != cfg_.width) {
        throw ShapeError("hourglass forward: expected [N," + std::to_string(cfg_.channels) +
                         "," + std::to_string(cfg_.height) + "," + std::to_string(cfg_.width) +
                         "], got " + shape_str(x.shape()));
    }
    const int64_t n = x.shape()[0];
    if (static_cast<int64_t>(ts.size()) != n) {
        throw ShapeError("hourglass forward: batch size " + std::to_string(n) + " but " +
                         std::to_string(ts.size()) + " timesteps");
    }
    std::vector<Tensor> outs;
    outs.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        Tensor xi = reshape(slice(x, 0, i, 1), {cfg_.channels, cfg_.height, cfg_.width});
        Tensor vi = forward_one(xi, ts[static_cast<size_t>(i)]);
        outs.push_back(reshape(vi, {1, cfg_.channels, cfg_.height, cfg_.width}));
    }
    return outs.size() == 1 ? outs[0] : concat(outs, 0);
}

}  // namespace rf
