#include "rf/flow/training.hpp"

#include <cmath>

#include "rf/ode/sampling.hpp"

namespace rf {

namespace {

// Exponential smoothing for readable loss curves.
struct LossTracker {
    double smoothed = 0.0;
    bool primed = false;
    double update(double loss) {
        smoothed = primed ? 0.98 * smoothed + 0.02 * loss : loss;
        primed = true;
        return smoothed;
    }
};

void check_finite_loss(double loss, int64_t step) {
    if (!std::isfinite(loss)) {
        throw NumericalError("training diverged: non-finite loss at step " +
                             std::to_string(step));
    }
}

Tensor rows_from(const std::vector<double>& flat, const Shape& sample_shape,
                 const std::vector<int64_t>& idx) {
    const int64_t d = shape_numel(sample_shape);
    Shape s = sample_shape;
    s.insert(s.begin(), static_cast<int64_t>(idx.size()));
    std::vector<double> data(idx.size() * static_cast<size_t>(d));
    for (size_t i = 0; i < idx.size(); ++i) {
        const double* src = flat.data() + idx[i] * d;
        std::copy(src, src + d, data.begin() + static_cast<int64_t>(i) * d);
    }
    return Tensor::from(std::move(s), std::move(data));
}

TrainResult run_loop(VelocityModel& model, const TrainConfig& cfg,
                     const std::function<Tensor(Rng&)>& step_loss) {
    if (cfg.steps < 1 || cfg.batch < 1) {
        throw UsageError("training needs steps >= 1 and batch >= 1");
    }
    Adam opt(cfg.adam);
    Rng rng(cfg.seed);
    TrainResult res;
    LossTracker tracker;
    for (int64_t step = 0; step < cfg.steps; ++step) {
        if (cfg.lr_final >= 0.0 && cfg.steps > 1) {
            const double f = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
            opt.set_lr(cfg.adam.lr + f * (cfg.lr_final - cfg.adam.lr));
        }
        model.params().zero_grad();
        Tape tape;
        Tensor loss = step_loss(rng);
        const double lv = loss.value();
        check_finite_loss(lv, step);
        tape.backward(loss);
        opt.step(model.params());
        const double sm = tracker.update(lv);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            res.loss_log.emplace_back(step, sm);
            if (cfg.on_log) cfg.on_log(step, sm);
        }
        res.final_loss = sm;
    }
    return res;
}

}  // namespace

TrainResult train_1rf(VelocityModel& model, const DataSource& data, const TrainConfig& cfg) {
    if (data.sample_shape() != model.sample_shape()) {
        throw ShapeError("train_1rf: data shape " + shape_str(data.sample_shape()) +
                         " does not match model shape " + shape_str(model.sample_shape()));
    }
    Shape batch_shape = model.sample_shape();
    batch_shape.insert(batch_shape.begin(), cfg.batch);
    return run_loop(model, cfg, [&](Rng& rng) {
        Tensor x1 = data.draw(cfg.batch, rng);
        Tensor x0 = Tensor::randn(batch_shape, rng);
        std::vector<double> ts(static_cast<size_t>(cfg.batch));
        for (auto& t : ts) t = cfg.time_dist.sample(rng);
        Tensor xt = interpolate_state(x0, x1, ts);
        Tensor v = model.forward(xt, ts);
        return cfm_loss(v, x0, x1);
    });
}

TrainResult train_reflow(VelocityModel& model, const PairDataset& pairs,
                         const TrainConfig& cfg) {
    if (pairs.kind != PairingKind::OdeCoupled) {
        throw UsageError(
            "train_reflow: pairs are independent, which would train a 1-RF; "
            "reflow requires ode-coupled pairs");
    }
    if (pairs.sample_shape != model.sample_shape()) {
        throw ShapeError("train_reflow: pair shape " + shape_str(pairs.sample_shape) +
                         " does not match model shape " + shape_str(model.sample_shape()));
    }
    if (pairs.count() < 1) throw DataError("train_reflow: empty pair dataset");
    const int64_t d = model.sample_numel();
    return run_loop(model, cfg, [&](Rng& rng) {
        std::vector<int64_t> idx(static_cast<size_t>(cfg.batch));
        for (auto& i : idx) i = rng.uniform_int(pairs.count());
        Tensor x0 = rows_from(pairs.x0, pairs.sample_shape, idx);
        Tensor x1 = rows_from(pairs.x1, pairs.sample_shape, idx);
        std::vector<double> ts(static_cast<size_t>(cfg.batch));
        for (auto& t : ts) t = cfg.time_dist.sample(rng);
        Tensor xt = interpolate_state(x0, x1, ts);
        Tensor v = model.forward(xt, ts);
        return pseudo_huber_loss(v, x0, x1, d);
    });
}

double reflow_loss_value(VelocityModel& model, const PairDataset& pairs,
                         const std::vector<int64_t>& indices, const std::vector<double>& ts) {
    NoGradGuard ng;
    Tensor x0 = rows_from(pairs.x0, pairs.sample_shape, indices);
    Tensor x1 = rows_from(pairs.x1, pairs.sample_shape, indices);
    Tensor xt = interpolate_state(x0, x1, ts);
    Tensor v = model.forward(xt, ts);
    return pseudo_huber_loss(v, x0, x1, model.sample_numel()).value();
}

TrainResult distill(VelocityModel& model, int64_t k, const PairDataset& pairs,
                    VelocityModel& parent, const SolverSpec& segment_solver,
                    const TrainConfig& cfg) {
    if (k < 1) throw UsageError("distill: k must be >= 1");
    if (pairs.kind != PairingKind::OdeCoupled) {
        throw UsageError("distill: pairs must be ode-coupled against the parent");
    }
    if (pairs.sample_shape != model.sample_shape()) {
        throw ShapeError("distill: pair shape " + shape_str(pairs.sample_shape) +
                         " does not match model shape " + shape_str(model.sample_shape()));
    }
    const int64_t n = pairs.count();
    const int64_t d = model.sample_numel();

    // Grid states y_0..y_k per pair: y_0 = x0, y_k = stored x1, interior
    // states from parent segment integration. Targets telescope so that k
    // student Euler steps reproduce the stored endpoint.
    std::vector<std::vector<double>> grid_states(static_cast<size_t>(k + 1));
    grid_states[0] = pairs.x0;
    grid_states[static_cast<size_t>(k)] = pairs.x1;
    if (k > 1) {
        FieldFn parent_field = model_field(parent);
        for (int64_t j = 1; j < k; ++j) {
            grid_states[static_cast<size_t>(j)].resize(static_cast<size_t>(n * d));
        }
        const double inv_k = 1.0 / static_cast<double>(k);
        for (int64_t i = 0; i < n; ++i) {
            std::vector<double> y(pairs.x0_at(i).begin(), pairs.x0_at(i).end());
            for (int64_t j = 1; j < k; ++j) {
                IntegrateResult r = integrate_span(parent_field, y,
                                                   static_cast<double>(j - 1) * inv_k,
                                                   static_cast<double>(j) * inv_k,
                                                   segment_solver);
                if (!r.ok()) {
                    throw NumericalError("distill: parent segment solve failed for pair " +
                                         std::to_string(i));
                }
                y = r.state;
                std::copy(y.begin(), y.end(),
                          grid_states[static_cast<size_t>(j)].begin() + i * d);
            }
        }
    }

    const double kd = static_cast<double>(k);
    return run_loop(model, cfg, [&, kd](Rng& rng) {
        std::vector<int64_t> idx(static_cast<size_t>(cfg.batch));
        for (auto& i : idx) i = rng.uniform_int(n);
        // One grid timestep per sample, uniform over {0, 1/k, ..., (k-1)/k}.
        std::vector<double> ts(static_cast<size_t>(cfg.batch));
        std::vector<int64_t> seg(static_cast<size_t>(cfg.batch));
        for (size_t b = 0; b < ts.size(); ++b) {
            seg[b] = rng.uniform_int(k);
            ts[b] = static_cast<double>(seg[b]) / kd;
        }
        Shape bshape = pairs.sample_shape;
        bshape.insert(bshape.begin(), cfg.batch);
        std::vector<double> xin(static_cast<size_t>(cfg.batch * d));
        std::vector<double> tgt(static_cast<size_t>(cfg.batch * d));
        for (int64_t b = 0; b < cfg.batch; ++b) {
            const auto& ya = grid_states[static_cast<size_t>(seg[static_cast<size_t>(b)])];
            const auto& yb = grid_states[static_cast<size_t>(seg[static_cast<size_t>(b)] + 1)];
            const double* pa = ya.data() + idx[static_cast<size_t>(b)] * d;
            const double* pb = yb.data() + idx[static_cast<size_t>(b)] * d;
            for (int64_t j = 0; j < d; ++j) {
                xin[static_cast<size_t>(b * d + j)] = pa[j];
                tgt[static_cast<size_t>(b * d + j)] = kd * (pb[j] - pa[j]);
            }
        }
        Tensor x = Tensor::from(bshape, std::move(xin));
        Tensor target = Tensor::from(bshape, std::move(tgt));
        Tensor v = model.forward(x, ts);
        // Same pseudo-Huber objective as reflow, against the segment target.
        return pseudo_huber_loss(v, Tensor::zeros(bshape), target, d);
    });
}

}  // namespace rf
