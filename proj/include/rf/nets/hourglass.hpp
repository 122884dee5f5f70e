#pragma once

#include <memory>
#include <vector>

#include "rf/nets/beam_table.hpp"
#include "rf/nets/layers.hpp"
#include "rf/nets/rope.hpp"
#include "rf/nets/time_embed.hpp"
#include "rf/nets/velocity_model.hpp"
#include "rf/nets/window.hpp"

namespace rf {

struct HourglassConfig {
    int64_t channels = 2;
    int64_t height = 16;   // rows; must match the beam table
    int64_t width = 128;   // pixels per revolution
    int64_t patch_w = 4;   // 1x4 landscape patches
    int64_t window_rows = 3;
    int64_t window_cols = 9;
    int64_t outer_width = 64;
    int64_t bottleneck_width = 128;
    int64_t outer_depth = 2;
    int64_t bottleneck_depth = 2;
    int64_t head_dim = 16;  // multiple of 4 (rotary pairs split azimuth/elevation)
    int64_t time_dim = 64;
    double time_base = 1000.0;
    double ffn_mult = 3.0;
    bool use_ape = true;
    uint64_t init_seed = 1;
};

// Hourglass transformer over range/reflectance tokens: windowed-attention
// outer stages around a global-attention bottleneck, with rotary phases
// driven by the beam table and an optional absolute position bias. Rows are
// merged 2:1 between stages; columns are never merged, which keeps the whole
// network equivariant to circular column shifts while the position bias is
// zero.
class HourglassVelocity : public VelocityModel {
public:
    HourglassVelocity(HourglassConfig cfg, BeamTable beams);

    const Shape& sample_shape() const override { return shape_; }
    Tensor forward(const Tensor& x, const std::vector<double>& ts) override;
    ParamMap& params() override { return params_; }
    const HourglassConfig& config() const { return cfg_; }
    const BeamTable& beams() const { return beams_; }

    Tensor forward_one(const Tensor& image, double t);

    // The learnable per-token absolute position bias (APE).
    Tensor& ape() { return ape_; }

private:
    struct Block {
        Tensor norm1_gain, norm2_gain;
        Linear mod_scale1, mod_shift1, mod_scale2, mod_shift2;
        AttentionWeights attn;
        Linear ffn1, ffn2;

        static Block make(ParamMap& params, const std::string& name, int64_t channels,
                          int64_t time_dim, int64_t ffn_width, Rng& rng);
        Tensor forward(const Tensor& tokens, const Tensor& temb, int64_t heads,
                       const RopeTable& rope, const WindowIndices* window,
                       const std::vector<int64_t>* repeat_idx) const;
    };

    HourglassConfig cfg_;
    BeamTable beams_;
    Shape shape_;
    TimeEmbedding temb_;
    ParamMap params_;

    PatchLayout patches_;
    WindowIndices window_;
    std::vector<int64_t> repeat_idx_;
    std::vector<int64_t> merge_idx_, unmerge_idx_;
    RopeTable rope_outer_, rope_mid_;

    Linear embed_, time_map_, down_, up_, out_proj_;
    Tensor ape_, fuse_w_, out_gain_;
    std::vector<Block> enc_, mid_, dec_;
};

}  // namespace rf
