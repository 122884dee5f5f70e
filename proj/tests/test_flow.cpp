#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rf/core/digest.hpp"
#include "rf/flow/data.hpp"
#include "rf/flow/pair_dataset.hpp"
#include "rf/flow/stage.hpp"
#include "rf/flow/time_dist.hpp"
#include "rf/flow/training.hpp"
#include "rf/nets/mlp.hpp"
#include "rf/ode/sampling.hpp"
#include "support/test_models.hpp"

using namespace rf;
using rf::testing::LambdaVelocity;
using rf::testing::RecordingVelocity;

namespace {

// Independent plain-loop evaluation of the flow matching objective.
double cfm_reference(const std::vector<double>& v, const std::vector<double>& x0,
                     const std::vector<double>& x1, int64_t n, int64_t d) {
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double r = (x1[static_cast<size_t>(i * d + j)] - x0[static_cast<size_t>(i * d + j)]) -
                             v[static_cast<size_t>(i * d + j)];
            s += r * r;
        }
        total += s;
    }
    return total / static_cast<double>(n);
}

// Independent plain-loop evaluation of the pseudo-Huber objective.
double ph_reference(const std::vector<double>& v, const std::vector<double>& x0,
                    const std::vector<double>& x1, int64_t n, int64_t d) {
    const double c = 0.00054 * std::sqrt(static_cast<double>(d));
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double r = (x1[static_cast<size_t>(i * d + j)] - x0[static_cast<size_t>(i * d + j)]) -
                             v[static_cast<size_t>(i * d + j)];
            s += r * r;
        }
        total += std::sqrt(s + c * c) - c;
    }
    return total / static_cast<double>(n);
}

MlpConfig small_mlp(int64_t d = 2) {
    MlpConfig cfg;
    cfg.data_dim = d;
    cfg.hidden = {48, 48};
    cfg.time_dim = 16;
    return cfg;
}

// Fits an MLP to output exactly a constant field c (a perfectly straight
// transport): zero hidden contribution, output bias = c.
std::unique_ptr<MlpVelocity> constant_mlp(const std::vector<double>& c) {
    MlpConfig cfg = small_mlp(static_cast<int64_t>(c.size()));
    auto model = std::make_unique<MlpVelocity>(cfg);
    for (auto& v : model->params().at("out.w").mut_data()) v = 0.0;
    auto bias = model->params().at("out.b").mut_data();
    std::copy(c.begin(), c.end(), bias.begin());
    return model;
}

double mean_endpoint_error_1step(VelocityModel& model, const PairDataset& pairs) {
    NoGradGuard ng;
    FieldFn f = model_field(model);
    double total = 0.0;
    const int64_t d = pairs.sample_numel();
    std::vector<double> out(static_cast<size_t>(d));
    for (int64_t i = 0; i < pairs.count(); ++i) {
        auto x0 = pairs.x0_at(i);
        auto x1 = pairs.x1_at(i);
        f(x0, 0.0, out);
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double e = x0[static_cast<size_t>(j)] + out[static_cast<size_t>(j)] -
                             x1[static_cast<size_t>(j)];
            s += e * e;
        }
        total += std::sqrt(s);
    }
    return total / static_cast<double>(pairs.count());
}

}  // namespace

TEST_CASE("interpolate_state: endpoints, arithmetic, midpoint symmetry") {
    Tensor x0 = Tensor::from({1, 2}, {0.0, 0.0});
    Tensor x1 = Tensor::from({1, 2}, {2.0, 4.0});

    CHECK(interpolate_state(x0, x1, 0.0).data()[0] == 0.0);
    CHECK(interpolate_state(x0, x1, 1.0).data()[1] == 4.0);

    Tensor q = interpolate_state(x0, x1, 0.25);
    CHECK(q.at(0) == doctest::Approx(0.5));
    CHECK(q.at(1) == doctest::Approx(1.0));

    Tensor a = interpolate_state(x0, x1, 0.5);
    Tensor b = interpolate_state(x1, x0, 0.5);
    CHECK(a.at(0) == b.at(0));
    CHECK(a.at(1) == b.at(1));

    CHECK_THROWS_AS(interpolate_state(x0, Tensor::zeros({1, 3}), 0.5), ShapeError);
}

TEST_CASE("cfm loss: exact-prediction zero, hand value, reference match to 1e-12") {
    Tensor x0 = Tensor::from({1, 2}, {0.0, 0.0});
    Tensor x1 = Tensor::from({1, 2}, {2.0, 0.0});

    Tensor exact = Tensor::from({1, 2}, {2.0, 0.0});
    CHECK(cfm_loss(exact, x0, x1).value() == 0.0);

    Tensor zero = Tensor::zeros({1, 2});
    CHECK(cfm_loss(zero, x0, x1).value() == doctest::Approx(4.0));

    Rng rng(77);
    const int64_t n = 32, d = 5;
    Tensor rx0 = Tensor::randn({n, d}, rng);
    Tensor rx1 = Tensor::randn({n, d}, rng);
    Tensor rv = Tensor::randn({n, d}, rng);
    const double mine = cfm_loss(rv, rx0, rx1).value();
    const double ref = cfm_reference(
        {rv.data().begin(), rv.data().end()}, {rx0.data().begin(), rx0.data().end()},
        {rx1.data().begin(), rx1.data().end()}, n, d);
    CHECK(std::fabs(mine - ref) <= 1e-12);
}

TEST_CASE("pseudo-huber loss: zero residual, d=1 value, large-residual asymptote") {
    Tensor x0 = Tensor::from({1, 1}, {0.0});

    Tensor x1 = Tensor::from({1, 1}, {1.0});
    Tensor v0 = Tensor::zeros({1, 1});
    Tensor vx = Tensor::from({1, 1}, {1.0});
    CHECK(pseudo_huber_loss(vx, x0, x1, 1).value() == 0.0);

    const double c = pseudo_huber_c(1);
    CHECK(c == doctest::Approx(0.00054));
    const double expected = std::sqrt(1.0 + c * c) - c;
    CHECK(pseudo_huber_loss(v0, x0, x1, 1).value() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.99946).epsilon(1e-4));

    Tensor far = Tensor::from({1, 1}, {1000.0});
    CHECK(std::fabs(pseudo_huber_loss(v0, x0, far, 1).value() - (1000.0 - c)) <= 1e-3);

    CHECK_THROWS_AS(pseudo_huber_loss(v0, x0, x1, 0), UsageError);
    CHECK_THROWS_AS(pseudo_huber_loss(v0, x0, x1, -3), UsageError);
}

TEST_CASE("pseudo-huber bounds and monotonicity in the residual norm") {
    Rng rng(5);
    const int64_t d = 4;
    Tensor x0 = Tensor::zeros({1, d});
    double prev = -1.0;
    for (double scale : {0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
        std::vector<double> r(static_cast<size_t>(d), scale / std::sqrt(static_cast<double>(d)));
        Tensor x1 = Tensor::from({1, d}, std::move(r));
        const double loss = pseudo_huber_loss(Tensor::zeros({1, d}), x0, x1, d).value();
        CHECK(loss >= 0.0);
        CHECK(loss <= scale + 1e-12);  // L_PH(r) <= ||r||
        CHECK(loss > prev);
        prev = loss;
    }
}

TEST_CASE("u-shaped sampler: quantile endpoints and symmetry") {
    TimeDist u{TimeDistKind::UShaped, 4.0};
    CHECK(u.icdf(0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u.icdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u.icdf(0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("u-shaped sampler: histogram matches the analytic density over 1e6 draws") {
    TimeDist u{TimeDistKind::UShaped, 4.0};
    const int64_t n = 1'000'000;
    const int bins = 50;
    std::vector<double> hist(bins, 0.0);
    Rng rng(2718);
    double mean = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double t = u.sample(rng);
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
        mean += t;
        int b = static_cast<int>(t * bins);
        if (b == bins) b = bins - 1;
        hist[static_cast<size_t>(b)] += 1.0;
    }
    mean /= static_cast<double>(n);
    CHECK(std::fabs(mean - 0.5) <= 0.002);

    // Analytic bin mass via the closed-form CDF, derived independently:
    // F(t) = (sinh(a(t-1/2)) + sinh(a/2)) / (2 sinh(a/2)).
    const double a = 4.0;
    auto cdf = [a](double t) {
        return (std::sinh(a * (t - 0.5)) + std::sinh(0.5 * a)) / (2.0 * std::sinh(0.5 * a));
    };
    double max_err = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins;
        const double hi = static_cast<double>(b + 1) / bins;
        const double expect = cdf(hi) - cdf(lo);
        const double got = hist[static_cast<size_t>(b)] / static_cast<double>(n);
        max_err = std::max(max_err, std::fabs(got - expect));
    }
    CHECK(max_err <= 0.01);
}

TEST_CASE("uniform sampler covers [0,1) evenly") {
    TimeDist u{TimeDistKind::Uniform, 4.0};
    Rng rng(1);
    double mean = 0.0;
    const int64_t n = 100000;
    for (int64_t i = 0; i < n; ++i) mean += u.sample(rng);
    CHECK(std::fabs(mean / static_cast<double>(n) - 0.5) <= 0.005);
}

TEST_CASE("train_1rf: latent-equals-data has the analytic conditional-mean optimum") {
    // With x1 and x0 both standard normal, the minimizer of the flow
    // matching loss is v*(x,t) = (2t-1)/(t^2+(1-t)^2) * x: exactly zero at
    // t = 1/2 and proportional to x elsewhere.
    MlpVelocity model(small_mlp(2));
    GaussianSource data(2);
    TrainConfig cfg;
    cfg.steps = 5000;
    cfg.batch = 256;
    cfg.adam.lr = 2e-3;
    cfg.lr_final = 1e-4;
    cfg.seed = 11;
    auto res = train_1rf(model, data, cfg);
    CHECK(std::isfinite(res.final_loss));

    NoGradGuard ng;
    Rng rng(99);
    const int64_t n = 256;

    // Mean velocity norm at the midpoint timestep.
    Tensor xt_mid = Tensor::randn({n, 2}, rng);
    for (auto& v : xt_mid.mut_data()) v *= std::sqrt(0.5);  // Var(x_0.5) = 1/2
    Tensor v_mid = model.forward(xt_mid, std::vector<double>(n, 0.5));
    double mean_norm = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        mean_norm += std::hypot(v_mid.at(2 * i), v_mid.at(2 * i + 1));
    }
    mean_norm /= static_cast<double>(n);
    CHECK(mean_norm <= 0.1);

    // Against the analytic optimum across timesteps.
    for (double t : {0.25, 0.75}) {
        const double var = t * t + (1.0 - t) * (1.0 - t);
        Tensor xt = Tensor::randn({n, 2}, rng);
        for (auto& v : xt.mut_data()) v *= std::sqrt(var);
        Tensor v_pred = model.forward(xt, std::vector<double>(n, t));
        const double coef = (2.0 * t - 1.0) / var;
        double mae = 0.0;
        for (int64_t i = 0; i < 2 * n; ++i) mae += std::fabs(v_pred.at(i) - coef * xt.at(i));
        mae /= static_cast<double>(2 * n);
        CHECK(mae <= 0.15);
    }
}

TEST_CASE("train_1rf: symmetric two-point data matches the hand-computed optimum") {
    // Data is an equal mixture of +mu and -mu. The conditional mean gives
    // v*(x,t) = (mu * tanh(t * mu.x / (1-t)^2) - x) / (1 - t).
    const std::vector<double> mu = {1.5, 0.0};
    class TwoPoint : public DataSource {
    public:
        const Shape& sample_shape() const override { return shape_; }
        Tensor draw(int64_t n, Rng& rng) const override {
            std::vector<double> d(static_cast<size_t>(2 * n));
            for (int64_t i = 0; i < n; ++i) {
                const double s = rng.uniform() < 0.5 ? 1.0 : -1.0;
                d[static_cast<size_t>(2 * i)] = 1.5 * s;
                d[static_cast<size_t>(2 * i + 1)] = 0.0;
            }
            return Tensor::from({n, 2}, std::move(d));
        }

    private:
        Shape shape_{2};
    } data;

    MlpConfig mc = small_mlp(2);
    mc.hidden = {64, 64};
    MlpVelocity model(mc);
    TrainConfig cfg;
    cfg.steps = 8000;
    cfg.batch = 256;
    cfg.adam.lr = 2e-3;
    cfg.lr_final = 5e-5;
    cfg.seed = 21;
    train_1rf(model, data, cfg);

    NoGradGuard ng;
    Rng rng(1234);
    double mae = 0.0;
    int64_t count = 0;
    for (double t : {0.3, 0.6}) {
        const int64_t n = 128;
        // Draw x_t from the true forward process.
        std::vector<double> xt(static_cast<size_t>(2 * n));
        for (int64_t i = 0; i < n; ++i) {
            const double s = rng.uniform() < 0.5 ? 1.0 : -1.0;
            xt[static_cast<size_t>(2 * i)] = t * s * mu[0] + (1.0 - t) * rng.normal();
            xt[static_cast<size_t>(2 * i + 1)] = (1.0 - t) * rng.normal();
        }
        Tensor xt_t = Tensor::from({n, 2}, std::vector<double>(xt));
        Tensor v = model.forward(xt_t, std::vector<double>(n, t));
        for (int64_t i = 0; i < n; ++i) {
            const double dot = mu[0] * xt[static_cast<size_t>(2 * i)];
            const double post = std::tanh(t * dot / ((1.0 - t) * (1.0 - t)));
            for (int64_t j = 0; j < 2; ++j) {
                const double star =
                    (mu[static_cast<size_t>(j)] * post - xt[static_cast<size_t>(2 * i + j)]) /
                    (1.0 - t);
                mae += std::fabs(v.at(2 * i + j) - star);
                ++count;
            }
        }
    }
    mae /= static_cast<double>(count);
    CHECK(mae <= 0.05);
}

TEST_CASE("train_1rf: point-mass target transports 64-step Euler samples onto it") {
    const std::vector<double> mu = {1.2, -0.8};
    PointMassSource data(mu);
    MlpVelocity model(small_mlp(2));
    TrainConfig cfg;
    cfg.steps = 3000;
    cfg.batch = 128;
    cfg.seed = 31;
    train_1rf(model, data, cfg);

    FlowStage stage;
    auto batch = sample(model, stage, 64, SolverSpec::euler(64), 555);
    double mean_dist = 0.0;
    for (int64_t i = 0; i < 64; ++i) {
        mean_dist += std::hypot(batch.states.at(2 * i) - mu[0], batch.states.at(2 * i + 1) - mu[1]);
    }
    mean_dist /= 64.0;
    CHECK(mean_dist <= 0.05);
}

TEST_CASE("train_1rf: deterministic replay produces identical parameters") {
    auto run = [&]() {
        MlpVelocity model(small_mlp(2));
        EightGaussians data;
        TrainConfig cfg;
        cfg.steps = 60;
        cfg.batch = 32;
        cfg.seed = 7;
        train_1rf(model, data, cfg);
        std::vector<double> flat;
        for (const auto& [name, p] : model.params())
            flat.insert(flat.end(), p.data().begin(), p.data().end());
        return flat;
    };
    CHECK(run() == run());  // bit-identical
}

TEST_CASE("generate_reflow_pairs: zero field couples each x0 to itself") {
    FieldFn zero = [](std::span<const double>, double, std::span<double> out) {
        for (auto& v : out) v = 0.0;
    };
    auto pairs = generate_reflow_pairs(zero, {2}, 50, SolverSpec::euler(8), 90);
    CHECK(pairs.kind == PairingKind::OdeCoupled);
    CHECK(pairs.count() == 50);
    CHECK(pairs.x0 == pairs.x1);
}

TEST_CASE("generate_reflow_pairs: same seed is bit-identical, file roundtrip works") {
    FieldFn rot = [](std::span<const double> x, double, std::span<double> out) {
        out[0] = -x[1];
        out[1] = x[0];
    };
    auto a = generate_reflow_pairs(rot, {2}, 64, SolverSpec::rk45(1e-5, 1e-5), 123);
    auto b = generate_reflow_pairs(rot, {2}, 64, SolverSpec::rk45(1e-5, 1e-5), 123);
    CHECK(a.x0 == b.x0);
    CHECK(a.x1 == b.x1);

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "rf_pairs_test";
    fs::create_directories(dir);
    const auto p1 = (dir / "a.pairs").string();
    const auto p2 = (dir / "b.pairs").string();
    a.save(p1);
    b.save(p2);
    CHECK(digest_file(p1) == digest_file(p2));

    PairDataset loaded = PairDataset::load(p1);
    CHECK(loaded.count() == 64);
    CHECK(loaded.kind == PairingKind::OdeCoupled);
    CHECK(loaded.sample_shape == Shape{2});
    CHECK(loaded.seed == 123);
    for (int64_t i = 0; i < 10; ++i) {
        CHECK(loaded.x0[static_cast<size_t>(i)] ==
              doctest::Approx(a.x0[static_cast<size_t>(i)]).epsilon(1e-6));
    }

    // 64-bit storage roundtrips exactly.
    const auto p3 = (dir / "c.pairs").string();
    a.save(p3, 8);
    PairDataset exact = PairDataset::load(p3);
    CHECK(exact.x0 == a.x0);
    CHECK(exact.x1 == a.x1);

    // Corruption is caught at the magic.
    const auto p4 = (dir / "bad.pairs").string();
    {
        std::ofstream bad(p4, std::ios::binary);
        bad << "NOTPAIRS________________";
    }
    CHECK_THROWS_AS(PairDataset::load(p4), DataError);
    fs::remove_all(dir);
}

TEST_CASE("generate_reflow_pairs: halved tolerance moves endpoints by <= 1e-3 RMS") {
    // Curved but smooth analytic field.
    FieldFn curved = [](std::span<const double> x, double t, std::span<double> out) {
        out[0] = -x[1] + 0.5 * std::sin(3.0 * t);
        out[1] = x[0];
    };
    auto coarse = generate_reflow_pairs(curved, {2}, 128, SolverSpec::rk45(1e-5, 1e-5), 44);
    auto fine = generate_reflow_pairs(curved, {2}, 128, SolverSpec::rk45(5e-6, 5e-6), 44);
    REQUIRE(coarse.x0 == fine.x0);
    double rms = 0.0;
    for (size_t i = 0; i < coarse.x1.size(); ++i) {
        const double d = coarse.x1[i] - fine.x1[i];
        rms += d * d;
    }
    rms = std::sqrt(rms / static_cast<double>(coarse.x1.size()));
    CHECK(rms <= 1e-3);
}

TEST_CASE("train_reflow: rejects independent pairs") {
    MlpVelocity model(small_mlp(2));
    PairDataset pairs;
    pairs.kind = PairingKind::Independent;
    pairs.sample_shape = {2};
    pairs.x0 = {0.0, 0.0};
    pairs.x1 = {1.0, 1.0};
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.batch = 1;
    CHECK_THROWS_WITH_AS(train_reflow(model, pairs, cfg), doctest::Contains("1-RF"),
                         UsageError);
}

TEST_CASE("train_reflow: loss at initialization matches an independent evaluation to 1e-10") {
    auto parent = constant_mlp({0.4, -0.2});
    // Make the parent non-trivial: small random perturbation of all weights.
    Rng prng(64);
    for (auto& [name, p] : parent->params()) {
        for (auto& v : p.mut_data()) v += 0.05 * prng.normal();
    }
    auto pairs = generate_reflow_pairs(model_field(*parent), {2}, 64,
                                       SolverSpec::rk45(1e-5, 1e-5), 17);

    // Student initialized from parent weights.
    MlpVelocity student(small_mlp(2));
    for (auto& [name, p] : student.params()) {
        auto src = parent->params().at(name).data();
        std::copy(src.begin(), src.end(), p.mut_data().begin());
    }

    std::vector<int64_t> idx;
    std::vector<double> ts;
    Rng rng(5);
    TimeDist u{TimeDistKind::UShaped, 4.0};
    for (int64_t i = 0; i < 32; ++i) {
        idx.push_back(rng.uniform_int(pairs.count()));
        ts.push_back(u.sample(rng));
    }
    const double mine = reflow_loss_value(student, pairs, idx, ts);

    // Independent evaluation: parent predictions + plain-loop pseudo-Huber.
    NoGradGuard ng;
    const int64_t n = 32, d = 2;
    std::vector<double> x0f, x1f, vf;
    for (int64_t i = 0; i < n; ++i) {
        auto a = pairs.x0_at(idx[static_cast<size_t>(i)]);
        auto b = pairs.x1_at(idx[static_cast<size_t>(i)]);
        std::vector<double> xt(2), v(2);
        for (int64_t j = 0; j < d; ++j) {
            xt[static_cast<size_t>(j)] = ts[static_cast<size_t>(i)] * b[static_cast<size_t>(j)] +
                                         (1.0 - ts[static_cast<size_t>(i)]) * a[static_cast<size_t>(j)];
        }
        parent->eval(xt, ts[static_cast<size_t>(i)], v);
        x0f.insert(x0f.end(), a.begin(), a.end());
        x1f.insert(x1f.end(), b.begin(), b.end());
        vf.insert(vf.end(), v.begin(), v.end());
    }
    const double ref = ph_reference(vf, x0f, x1f, n, d);
    CHECK(std::fabs(mine - ref) <= 1e-10);
}

TEST_CASE("train_reflow: a perfectly straight parent is a fixed point") {
    auto parent = constant_mlp({0.8, 0.3});
    auto pairs = generate_reflow_pairs(model_field(*parent), {2}, 256,
                                       SolverSpec::rk45(1e-5, 1e-5), 29);
    const double before = mean_endpoint_error_1step(*parent, pairs);
    const double transport = std::hypot(0.8, 0.3);  // mean |x1 - x0| of the pairs

    TrainConfig cfg;
    cfg.steps = 400;
    cfg.batch = 64;
    cfg.seed = 3;
    cfg.time_dist = TimeDist{TimeDistKind::UShaped, 4.0};
    train_reflow(*parent, pairs, cfg);
    const double after = mean_endpoint_error_1step(*parent, pairs);

    // Unchanged within 5% of the transport scale. (An exact fixed point is
    // unreachable under Adam, whose updates are gradient-scale invariant.)
    CHECK(after <= before + 0.05 * transport);
    CHECK(after <= 5e-3);
}

TEST_CASE("distill: k=1 student lands on the stored endpoints") {
    // Parent: nontrivial curved analytic field.
    LambdaVelocity parent({2}, [](std::span<const double> x, double t, std::span<double> out) {
        out[0] = 1.2 - 0.8 * x[0] + 0.3 * std::sin(2.0 * t);
        out[1] = -0.5 - 0.2 * x[1];
    });
    auto pairs = generate_reflow_pairs(model_field(parent), {2}, 512,
                                       SolverSpec::rk45(1e-6, 1e-6), 61);

    MlpVelocity student(small_mlp(2));
    TrainConfig cfg;
    cfg.steps = 2500;
    cfg.batch = 128;
    cfg.seed = 13;
    cfg.time_dist = TimeDist{TimeDistKind::UShaped, 4.0};
    distill(student, 1, pairs, parent, SolverSpec::rk45(1e-6, 1e-6), cfg);

    // Paired RMS between 1-Euler-step endpoints and stored x1 bounds the
    // 2-Wasserstein distance between the two sample sets.
    double rms = 0.0;
    NoGradGuard ng;
    std::vector<double> v(2);
    for (int64_t i = 0; i < pairs.count(); ++i) {
        auto x0 = pairs.x0_at(i);
        auto x1 = pairs.x1_at(i);
        student.eval(x0, 0.0, v);
        for (int64_t j = 0; j < 2; ++j) {
            const double e = x0[static_cast<size_t>(j)] + v[static_cast<size_t>(j)] -
                             x1[static_cast<size_t>(j)];
            rms += e * e;
        }
    }
    rms = std::sqrt(rms / static_cast<double>(pairs.count() * 2));
    CHECK(rms <= 0.1);
}

TEST_CASE("distill: k=2 trains exactly on the grid {0, 0.5}") {
    auto inner = constant_mlp({0.4, 0.1});
    RecordingVelocity recorder(*inner);
    LambdaVelocity parent({2}, [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.4;
        out[1] = 0.1;
    });
    auto pairs = generate_reflow_pairs(model_field(parent), {2}, 32, SolverSpec::euler(16), 8);

    TrainConfig cfg;
    cfg.steps = 20;
    cfg.batch = 16;
    cfg.seed = 2;
    distill(recorder, 2, pairs, parent, SolverSpec::rk45(1e-5, 1e-5), cfg);

    REQUIRE(!recorder.seen_ts.empty());
    for (double t : recorder.seen_ts) {
        CHECK((t == 0.0 || t == 0.5));
    }
}

TEST_CASE("distill: grid metadata and an already-straight parent stays put") {
    FlowStage td;
    td.kind = StageKind::Distilled;
    td.k = 4;
    td.parent_digest = "p";
    auto grid = td.step_grid();
    REQUIRE(grid.size() == 4);
    CHECK(grid[0] == 0.0);
    CHECK(grid[1] == 0.25);
    CHECK(grid[2] == 0.5);
    CHECK(grid[3] == 0.75);

    auto parent = constant_mlp({-0.3, 0.6});
    auto pairs = generate_reflow_pairs(model_field(*parent), {2}, 128,
                                       SolverSpec::rk45(1e-5, 1e-5), 14);
    const double before = mean_endpoint_error_1step(*parent, pairs);
    const double transport = std::hypot(-0.3, 0.6);
    TrainConfig cfg;
    cfg.steps = 300;
    cfg.batch = 64;
    cfg.seed = 4;
    distill(*parent, 1, pairs, *parent, SolverSpec::rk45(1e-5, 1e-5), cfg);
    const double after = mean_endpoint_error_1step(*parent, pairs);
    CHECK(after <= before + 0.05 * transport);
    CHECK(after <= 5e-3);

    CHECK_THROWS_AS(distill(*parent, 0, pairs, *parent, SolverSpec::rk45(1e-5, 1e-5), cfg),
                    UsageError);
}

TEST_CASE("stage tags parse and validate") {
    CHECK(FlowStage::from_tag("1-RF").kind == StageKind::OneRF);
    CHECK(FlowStage::from_tag("2-RF").kind == StageKind::TwoRF);
    auto td = FlowStage::from_tag("4-TD");
    CHECK(td.kind == StageKind::Distilled);
    CHECK(td.k == 4);
    CHECK(td.tag() == "4-TD");
    CHECK_THROWS_AS(FlowStage::from_tag("3-RF"), UsageError);
    CHECK_THROWS_AS(FlowStage::from_tag("0-TD"), UsageError);
    CHECK_THROWS_AS(FlowStage::from_tag("junk"), UsageError);

    FlowStage orphan;
    orphan.kind = StageKind::TwoRF;
    CHECK_THROWS_AS(orphan.validate(), UsageError);
}
