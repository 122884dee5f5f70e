#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "rf/nets/hourglass.hpp"
#include "rf/nets/mlp.hpp"
#include "rf/nets/rope.hpp"
#include "rf/nets/time_embed.hpp"
#include "rf/nets/window.hpp"
#include "support/finite_diff.hpp"

using namespace rf;

namespace {

// Circularly shifts image columns by s pixels.
Tensor shift_columns(const Tensor& img, int64_t s) {
    const auto& sh = img.shape();
    const int64_t ch = sh[0], h = sh[1], w = sh[2];
    std::vector<double> out(static_cast<size_t>(img.numel()));
    for (int64_t c = 0; c < ch; ++c)
        for (int64_t r = 0; r < h; ++r)
            for (int64_t x = 0; x < w; ++x) {
                const int64_t src = c * h * w + r * w + x;
                const int64_t dst = c * h * w + r * w + (x + s) % w;
                out[static_cast<size_t>(dst)] = img.at(src);
            }
    return Tensor::from({ch, h, w}, std::move(out));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.at(i) - b.at(i)));
    return m;
}

}  // namespace

TEST_CASE("time embedding: t=0 gives zero sines and unit cosines") {
    TimeEmbedding te{16, 1000.0};
    auto e = te.embed(0.0);
    for (int i = 0; i < 8; ++i) {
        CHECK(e[static_cast<size_t>(i)] == 0.0);
        CHECK(e[static_cast<size_t>(8 + i)] == 1.0);
    }
}

TEST_CASE("time embedding: injective on a 256-point grid of [0,1]") {
    TimeEmbedding te{32, 1000.0};
    std::vector<std::vector<double>> embs;
    for (int i = 0; i < 256; ++i) embs.push_back(te.embed(i / 255.0));
    double min_dist = 1e300;
    for (size_t a = 0; a < embs.size(); ++a) {
        for (size_t b = a + 1; b < embs.size(); ++b) {
            double d2 = 0.0;
            for (size_t k = 0; k < embs[a].size(); ++k) {
                const double d = embs[a][k] - embs[b][k];
                d2 += d * d;
            }
            min_dist = std::min(min_dist, d2);
        }
    }
    CHECK(min_dist > 0.0);
}

TEST_CASE("time embedding: deterministic across calls, bounded, overshoot allowed") {
    TimeEmbedding te{16, 1000.0};
    CHECK(te.embed(0.37) == te.embed(0.37));
    for (double t : {-0.25, 1.5}) {
        for (double v : te.embed(t)) CHECK(std::fabs(v) <= 1.0);
    }
}

TEST_CASE("patchify: paper-scale image tokenizes to 64x256 tokens of dim 8") {
    auto pl = PatchLayout::make(2, 64, 1024, 4);
    CHECK(pl.tokens() == 64 * 256);
    CHECK(pl.token_dim() == 8);

    Rng rng(3);
    Tensor img = Tensor::randn({2, 64, 1024}, rng);
    Tensor tok = patchify(pl, img);
    CHECK(tok.shape() == Shape{64 * 256, 8});
    // token (r, c) carries channels of pixels (r, 4c..4c+3)
    const int64_t r = 17, c = 43;
    for (int64_t ch = 0; ch < 2; ++ch)
        for (int64_t dx = 0; dx < 4; ++dx)
            CHECK(tok.at((r * 256 + c) * 8 + ch * 4 + dx) ==
                  img.at(ch * 64 * 1024 + r * 1024 + c * 4 + dx));

    Tensor back = unpatchify(pl, tok);
    CHECK(max_abs_diff(back, img) == 0.0);  // exact bijection
}

TEST_CASE("patchify: constant image gives identical tokens; bad width rejected") {
    auto pl = PatchLayout::make(2, 4, 16, 4);
    Tensor img = Tensor::full({2, 4, 16}, 0.75);
    Tensor tok = patchify(pl, img);
    for (int64_t t = 1; t < tok.shape()[0]; ++t)
        for (int64_t k = 0; k < 8; ++k) CHECK(tok.at(t * 8 + k) == tok.at(k));
    CHECK_THROWS_AS(PatchLayout::make(2, 4, 18, 4), UsageError);
}

TEST_CASE("window indices: circular column wrap at (row 5, col 0), cols=16") {
    auto w = circular_window_indices(8, 16, 3, 9);
    CHECK(w.neighborhood() == 27);
    const int64_t tok = 5 * 16 + 0;
    std::set<int64_t> cols_seen, rows_seen;
    for (int64_t j = 0; j < 27; ++j) {
        const int64_t n = w.idx[static_cast<size_t>(tok * 27 + j)];
        rows_seen.insert(n / 16);
        cols_seen.insert(n % 16);
    }
    CHECK(rows_seen == std::set<int64_t>{4, 5, 6});
    CHECK(cols_seen == std::set<int64_t>{12, 13, 14, 15, 0, 1, 2, 3, 4});
}

TEST_CASE("window indices: row clamp at the top edge") {
    auto w = circular_window_indices(8, 16, 3, 9);
    std::set<int64_t> rows_seen;
    for (int64_t j = 0; j < 27; ++j)
        rows_seen.insert(w.idx[static_cast<size_t>(0 * 27 + j)] / 16);
    CHECK(rows_seen == std::set<int64_t>{0, 1, 2});
    std::set<int64_t> rows_bottom;
    const int64_t last = 7 * 16 + 3;
    for (int64_t j = 0; j < 27; ++j)
        rows_bottom.insert(w.idx[static_cast<size_t>(last * 27 + j)] / 16);
    CHECK(rows_bottom == std::set<int64_t>{5, 6, 7});
}

TEST_CASE("window indices: uniform neighborhood of 27 and in-range for rows >= 3") {
    for (int64_t rows : {3, 5, 8}) {
        for (int64_t cols : {9, 12, 32}) {
            auto w = circular_window_indices(rows, cols, 3, 9);
            CHECK(w.neighborhood() == 27);
            CHECK(static_cast<int64_t>(w.idx.size()) == rows * cols * 27);
            for (int64_t i : w.idx) {
                CHECK(i >= 0);
                CHECK(i < rows * cols);
            }
        }
    }
    CHECK_THROWS_AS(circular_window_indices(4, 8, 3, 9), UsageError);  // cols < 9
}

TEST_CASE("rope phases: full horizontal wrap is a 2*pi multiple for every harmonic") {
    BeamTable bt = BeamTable::uniform(4, 3.0, -25.0);
    const int64_t cols = 16, pairs = 4;
    auto phases = rope_phases(bt, cols, pairs);
    // Harmonic phase at a column one full wrap away differs by k*2*pi.
    for (int64_t p = 0; p < pairs / 2; ++p) {
        const double k = std::pow(2.0, static_cast<double>(p));
        const double before = phases[static_cast<size_t>(0 * pairs + p)];     // col 0
        const double wrapped = k * (BeamTable::azimuth(0, cols) - 2.0 * M_PI);
        const double diff = before - wrapped;
        CHECK(std::remainder(diff, 2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::cos(before) == doctest::Approx(std::cos(wrapped)).epsilon(1e-12));
        CHECK(std::sin(before) == doctest::Approx(std::sin(wrapped)).epsilon(1e-12));
    }
}

TEST_CASE("rope phases: adjacent token columns differ by 2*pi/256 at harmonic 1") {
    BeamTable bt = BeamTable::uniform(2, 1.0, -1.0);
    const int64_t cols = 256, pairs = 4;
    auto phases = rope_phases(bt, cols, pairs);
    const double p0 = phases[0 * pairs + 0];
    const double p1 = phases[1 * pairs + 0];  // same row, next column
    CHECK(std::fabs(p0 - p1) == doctest::Approx(2.0 * M_PI / 256.0).epsilon(1e-12));
}

TEST_CASE("rope phases: symmetric beam table gives antisymmetric vertical phases") {
    BeamTable bt(std::vector<double>{0.02, 0.01, -0.01, -0.02});
    const int64_t cols = 9, pairs = 4;
    auto phases = rope_phases(bt, cols, pairs);
    const int64_t rows = 4;
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t p = pairs / 2; p < pairs; ++p) {
            const double top = phases[static_cast<size_t>((r * cols + 3) * pairs + p)];
            const double bot =
                phases[static_cast<size_t>(((rows - 1 - r) * cols + 3) * pairs + p)];
            CHECK(top == doctest::Approx(-bot).epsilon(1e-12));
        }
    }
}

TEST_CASE("attention: all-identical tokens produce all-identical outputs") {
    Rng rng(11);
    ParamMap params;
    auto w = AttentionWeights::make(params, "a", 16, rng);
    BeamTable bt = BeamTable::uniform(4, 2.0, -10.0);
    auto rope = rope_table(bt, 16, 8, 1);  // single head
    auto win = circular_window_indices(4, 16, 3, 9);
    std::vector<int64_t> rep(static_cast<size_t>(win.tokens() * 27));
    for (int64_t t = 0; t < win.tokens(); ++t)
        for (int64_t j = 0; j < 27; ++j) rep[static_cast<size_t>(t * 27 + j)] = t;

    Tensor tokens = Tensor::full({64, 16}, 0.3);
    Tensor out = attention(w, tokens, 1, rope.cos_v, rope.sin_v, &win, &rep);
    CHECK(out.shape() == tokens.shape());
    for (int64_t t = 1; t < 64; ++t)
        for (int64_t c = 0; c < 16; ++c)
            CHECK(out.at(t * 16 + c) == doctest::Approx(out.at(c)).epsilon(1e-12));
}

TEST_CASE("attention: perturbing a token outside the window leaves the focal token unchanged") {
    Rng rng(13);
    ParamMap params;
    auto w = AttentionWeights::make(params, "a", 16, rng);
    // Make the output projection non-trivial so changes would be visible.
    for (auto& v : params.at("a.out.w").mut_data()) v = rng.normal() * 0.2;
    BeamTable bt = BeamTable::uniform(8, 2.0, -10.0);
    auto rope = rope_table(bt, 32, 4, 2);  // 2 heads of dim 8
    auto win = circular_window_indices(8, 32, 3, 9);
    std::vector<int64_t> rep(static_cast<size_t>(win.tokens() * 27));
    for (int64_t t = 0; t < win.tokens(); ++t)
        for (int64_t j = 0; j < 27; ++j) rep[static_cast<size_t>(t * 27 + j)] = t;

    Tensor tokens = Tensor::randn({8 * 32, 16}, rng);
    Tensor out1 = attention(w, tokens, 2, rope.cos_v, rope.sin_v, &win, &rep);

    // Focal token (4, 0); token (4, 16) is half a revolution away.
    Tensor tokens2 = tokens.clone();
    const int64_t far = 4 * 32 + 16;
    for (int64_t c = 0; c < 16; ++c) tokens2.mut_data()[static_cast<size_t>(far * 16 + c)] += 3.0;
    Tensor out2 = attention(w, tokens2, 2, rope.cos_v, rope.sin_v, &win, &rep);

    const int64_t focal = 4 * 32 + 0;
    for (int64_t c = 0; c < 16; ++c)
        CHECK(out1.at(focal * 16 + c) == out2.at(focal * 16 + c));
    // ... while the perturbed token itself did change.
    double moved = 0.0;
    for (int64_t c = 0; c < 16; ++c)
        moved += std::fabs(out1.at(far * 16 + c) - out2.at(far * 16 + c));
    CHECK(moved > 0.0);
}

TEST_CASE("skip fusion blends per channel") {
    Tensor current = Tensor::full({3, 4}, 2.0);
    Tensor skip = Tensor::full({3, 4}, 4.0);

    CHECK(max_abs_diff(skip_fusion(current, skip, Tensor::full({4}, 1.0)), skip) == 0.0);
    CHECK(max_abs_diff(skip_fusion(current, skip, Tensor::full({4}, 0.0)), current) == 0.0);
    Tensor mid = skip_fusion(current, skip, Tensor::full({4}, 0.5));
    for (int64_t i = 0; i < 12; ++i) CHECK(mid.at(i) == doctest::Approx(3.0));

    CHECK_THROWS_AS(skip_fusion(current, Tensor::zeros({2, 4}), Tensor::full({4}, 0.5)),
                    ShapeError);
}

TEST_CASE("mlp: zero-initialized final layer gives exactly zero output") {
    MlpConfig cfg;
    cfg.data_dim = 2;
    MlpVelocity mlp(cfg);
    Rng rng(17);
    Tensor x = Tensor::randn({5, 2}, rng);
    Tensor v = mlp.forward(x, {0.1, 0.3, 0.5, 0.7, 0.9});
    CHECK(v.shape() == Shape{5, 2});
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(v.at(i) == 0.0);
}

TEST_CASE("mlp: gradient of mean squared output matches finite differences") {
    MlpConfig cfg;
    cfg.data_dim = 3;
    cfg.hidden = {16, 16};
    MlpVelocity mlp(cfg);
    Rng rng(19);
    // Perturb the zero-init output layer so gradients reach every weight.
    for (auto& v : mlp.params().at("out.w").mut_data()) v = 0.3 * rng.normal();

    Tensor x = Tensor::randn({4, 3}, rng);
    std::vector<double> ts = {0.2, 0.4, 0.6, 0.8};
    auto objective = [&]() { return reduce_mean(mul(mlp.forward(x, ts), mlp.forward(x, ts))); };
    {
        Tape tape;
        tape.backward(objective());
    }
    auto eval = [&]() {
        NoGradGuard ng;
        return objective().value();
    };
    auto res = rf::testing::check_gradients(mlp.params(), eval, 1e-5, 37);
    INFO("worst: ", res.worst, " rel: ", res.max_rel_err);
    CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("hourglass: output shape equals input shape") {
    HourglassConfig cfg;
    cfg.height = 16;
    cfg.width = 64;
    HourglassVelocity model(cfg, BeamTable::uniform(16, 3.0, -25.0));
    Rng rng(23);
    Tensor x = Tensor::randn({1, 2, 16, 64}, rng);
    Tensor v = model.forward(x, {0.5});
    CHECK(v.shape() == Shape{1, 2, 16, 64});
    // Zero-initialized readout: fresh model is the zero field.
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(v.at(i) == 0.0);
}

TEST_CASE("hourglass: gradients match finite differences") {
    HourglassConfig cfg;
    cfg.height = 8;
    cfg.width = 64;
    cfg.outer_width = 16;
    cfg.bottleneck_width = 32;
    cfg.outer_depth = 1;
    cfg.bottleneck_depth = 1;
    cfg.head_dim = 8;
    cfg.time_dim = 16;
    HourglassVelocity model(cfg, BeamTable::uniform(8, 3.0, -25.0));
    Rng rng(29);
    // Give zero-initialized layers signal so the chain rule is exercised
    // end to end.
    for (const char* name : {"out.w", "enc0.attn.out.w", "mid0.ffn2.w", "dec0.ffn2.w"}) {
        for (auto& v : model.params().at(name).mut_data()) v = 0.2 * rng.normal();
    }

    Tensor x = Tensor::randn({1, 2, 8, 64}, rng);
    auto objective = [&]() {
        Tensor v = model.forward(x, {0.4});
        return reduce_mean(mul(v, v));
    };
    {
        Tape tape;
        tape.backward(objective());
    }
    auto eval = [&]() {
        NoGradGuard ng;
        return objective().value();
    };
    auto res = rf::testing::check_gradients(model.params(), eval, 1e-5, 701);
    INFO("worst: ", res.worst, " rel: ", res.max_rel_err, " checked: ", res.checked);
    CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("hourglass: horizontal circular shift equivariance with zero APE") {
    HourglassConfig cfg;
    cfg.height = 8;
    cfg.width = 64;
    HourglassVelocity model(cfg, BeamTable::uniform(8, 3.0, -25.0));
    Rng rng(31);
    // Random weights everywhere, APE kept at zero.
    for (auto& [name, p] : model.params()) {
        if (name == "ape") continue;
        for (auto& v : p.mut_data()) v += 0.05 * rng.normal();
    }

    Tensor x = Tensor::randn({2, 8, 64}, rng);
    NoGradGuard ng;
    Tensor base = model.forward_one(x, 0.31);
    for (int64_t shift_tokens : {1, 3, 7}) {
        const int64_t s = shift_tokens * cfg.patch_w;
        Tensor shifted_out = model.forward_one(shift_columns(x, s), 0.31);
        Tensor expect = shift_columns(base, s);
        CHECK(max_abs_diff(shifted_out, expect) <= 1e-5);
    }
}

TEST_CASE("beam table: validation, io roundtrip, nearest row") {
    CHECK_THROWS_AS(BeamTable(std::vector<double>{0.1, 0.1}), UsageError);
    CHECK_THROWS_AS(BeamTable(std::vector<double>{-0.1, 0.2}), UsageError);

    BeamTable bt = BeamTable::uniform(64, 3.0, -25.0);
    CHECK(bt.rows() == 64);
    CHECK(bt.elevation(0) == doctest::Approx(3.0 * M_PI / 180.0));
    CHECK(bt.elevation(63) == doctest::Approx(-25.0 * M_PI / 180.0));

    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "rf_beams_test.txt").string();
    bt.save(path);
    BeamTable loaded = BeamTable::load(path);
    REQUIRE(loaded.rows() == 64);
    for (int64_t r = 0; r < 64; ++r)
        CHECK(loaded.elevation(r) == doctest::Approx(bt.elevation(r)).epsilon(1e-9));
    fs::remove(path);

    CHECK(bt.nearest_row(3.0 * M_PI / 180.0) == 0);
    CHECK(bt.nearest_row(-25.0 * M_PI / 180.0) == 63);
    CHECK(bt.nearest_row(0.0) == bt.nearest_row(1e-4));
}
