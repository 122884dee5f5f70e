#include "rf/ode/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace rf {

FieldFn model_field(VelocityModel& model) {
    return [&model](std::span<const double> x, double t, std::span<double> out) {
        model.eval(x, t, out);
    };
}

void validate_stage_solver(const FlowStage& stage, const SolverSpec& spec) {
    spec.validate();
    if (stage.kind != StageKind::Distilled) return;
    if (spec.method != SolverMethod::Euler || spec.steps != stage.k) {
        throw UsageError("stage " + stage.tag() + " was distilled for exactly " +
                         std::to_string(stage.k) + "-step Euler sampling; got " +
                         spec.describe());
    }
}

SampleBatch sample(VelocityModel& model, const FlowStage& stage, int64_t n,
                   const SolverSpec& spec, uint64_t seed) {
    if (n < 0) throw UsageError("sample: negative count");
    if (spec.direction != Direction::Forward) {
        throw UsageError("sample: generation integrates forward from t=0");
    }
    validate_stage_solver(stage, spec);

    const int64_t d = model.sample_numel();
    Shape batch_shape = model.sample_shape();
    batch_shape.insert(batch_shape.begin(), n);

    SampleBatch out;
    out.nfe.reserve(static_cast<size_t>(n));
    std::vector<double> data(static_cast<size_t>(n * d));

    Rng rng(seed);
    FieldFn field = model_field(model);
    std::vector<double> x0(static_cast<size_t>(d));
    for (int64_t i = 0; i < n; ++i) {
        for (auto& v : x0) v = rng.normal();
        IntegrateResult r = integrate(field, x0, spec);
        if (!r.ok()) {
            throw NumericalError("sample: integration failed for sample " + std::to_string(i) +
                                 " (" + (r.status == SolveStatus::StepUnderflow
                                             ? "step underflow"
                                             : "non-finite state") +
                                 ")");
        }
        std::copy(r.state.begin(), r.state.end(),
                  data.begin() + static_cast<int64_t>(i * d));
        out.nfe.push_back(r.nfe);
        if (spec.record) out.trajectories.push_back(std::move(r.trajectory));
    }
    out.states = Tensor::from(std::move(batch_shape), std::move(data));
    return out;
}

IntegrateResult invert(VelocityModel& model, std::span<const double> x1,
                       const SolverSpec& spec) {
    if (spec.direction != Direction::Reverse) {
        throw UsageError("invert: solver spec must run in reverse (t=1 down to t=0)");
    }
    FieldFn field = model_field(model);
    return integrate(field, x1, spec);
}

std::vector<double> slerp(std::span<const double> z0, std::span<const double> z1,
                          double lambda) {
    if (z0.size() != z1.size()) throw ShapeError("slerp: dimension mismatch");
    double n0 = 0.0, n1 = 0.0, dot = 0.0;
    for (size_t i = 0; i < z0.size(); ++i) {
        n0 += z0[i] * z0[i];
        n1 += z1[i] * z1[i];
        dot += z0[i] * z1[i];
    }
    n0 = std::sqrt(n0);
    n1 = std::sqrt(n1);
    if (n0 == 0.0 || n1 == 0.0) throw UsageError("slerp: zero-length endpoint");
    const double cos_omega = std::clamp(dot / (n0 * n1), -1.0, 1.0);
    const double omega = std::acos(cos_omega);
    if (omega > M_PI - 1e-6) {
        throw UsageError("slerp: endpoints are antipodal (angle " + std::to_string(omega) + ")");
    }
    std::vector<double> z(z0.size());
    const double sin_omega = std::sin(omega);
    if (sin_omega < 1e-12) {
        for (size_t i = 0; i < z.size(); ++i) {
            z[i] = (1.0 - lambda) * z0[i] + lambda * z1[i];
        }
        return z;
    }
    const double w0 = std::sin((1.0 - lambda) * omega) / sin_omega;
    const double w1 = std::sin(lambda * omega) / sin_omega;
    for (size_t i = 0; i < z.size(); ++i) z[i] = w0 * z0[i] + w1 * z1[i];
    return z;
}

}  // namespace rf
