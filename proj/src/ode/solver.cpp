#include "rf/ode/solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace rf {

std::string to_string(SolverMethod m) {
    switch (m) {
        case SolverMethod::Euler: return "euler";
        case SolverMethod::Midpoint: return "midpoint";
        case SolverMethod::Rk45: return "rk45";
    }
    throw Error("unreachable solver method");
}

SolverMethod solver_method_from_string(const std::string& s) {
    if (s == "euler") return SolverMethod::Euler;
    if (s == "midpoint") return SolverMethod::Midpoint;
    if (s == "rk45") return SolverMethod::Rk45;
    throw UsageError("unknown solver method: " + s);
}

SolverSpec SolverSpec::euler(int64_t steps, Direction dir) {
    SolverSpec s;
    s.method = SolverMethod::Euler;
    s.steps = steps;
    s.direction = dir;
    return s;
}

SolverSpec SolverSpec::midpoint(int64_t steps, Direction dir) {
    SolverSpec s;
    s.method = SolverMethod::Midpoint;
    s.steps = steps;
    s.direction = dir;
    return s;
}

SolverSpec SolverSpec::rk45(double abs_tol, double rel_tol, Direction dir) {
    SolverSpec s;
    s.method = SolverMethod::Rk45;
    s.steps = 0;
    s.abs_tol = abs_tol;
    s.rel_tol = rel_tol;
    s.direction = dir;
    return s;
}

SolverSpec SolverSpec::rk45_fixed(int64_t steps, Direction dir) {
    SolverSpec s;
    s.method = SolverMethod::Rk45;
    s.steps = steps;
    s.direction = dir;
    return s;
}

void SolverSpec::validate() const {
    if (method == SolverMethod::Rk45 && steps == 0) {
        if (abs_tol <= 0.0 || rel_tol <= 0.0) {
            throw UsageError("adaptive solver tolerances must be positive");
        }
    } else if (steps < 1) {
        throw UsageError("fixed-step solver needs steps >= 1, got " + std::to_string(steps));
    }
}

std::string SolverSpec::describe() const {
    char buf[160];
    if (method == SolverMethod::Rk45 && steps == 0) {
        std::snprintf(buf, sizeof(buf), "rk45 atol=%g rtol=%g %s", abs_tol, rel_tol,
                      direction == Direction::Forward ? "fwd" : "rev");
    } else {
        std::snprintf(buf, sizeof(buf), "%s steps=%lld %s", to_string(method).c_str(),
                      static_cast<long long>(steps),
                      direction == Direction::Forward ? "fwd" : "rev");
    }
    return buf;
}

namespace {

bool finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// Grid nodes for fixed-step traversal: n/N ascending, mirrored for reverse.
double grid_time(int64_t n, int64_t steps, Direction dir) {
    const double f = static_cast<double>(n) / static_cast<double>(steps);
    return dir == Direction::Forward ? f : 1.0 - f;
}

struct Recorder {
    Trajectory* traj;
    void push(double t, std::span<const double> x) {
        if (traj == nullptr) return;
        traj->times.push_back(t);
        traj->states.emplace_back(x.begin(), x.end());
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,     0.0,        500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84,  0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

class Rk45Stepper {
public:
    Rk45Stepper(const FieldFn& field, size_t dim, int64_t& nfe)
        : field_(field), nfe_(nfe), stages_(7, std::vector<double>(dim)), tmp_(dim) {}

    // One DP5 step from (x, t) over h. Fills x_new and the embedded-pair
    // error estimate. stage 0 must hold v(x, t) on entry (FSAL).
    void step(std::span<const double> x, double t, double h, std::vector<double>& x_new,
              std::vector<double>& err) {
        const size_t dim = x.size();
        for (int s = 1; s < 7; ++s) {
            for (size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += kA[s][j] * stages_[static_cast<size_t>(j)][i];
                tmp_[i] = x[i] + h * acc;
            }
            field_(tmp_, t + kC[s] * h, stages_[static_cast<size_t>(s)]);
            ++nfe_;
        }
        x_new.resize(dim);
        err.resize(dim);
        for (size_t i = 0; i < dim; ++i) {
            double acc5 = 0.0, acc4 = 0.0;
            for (int s = 0; s < 7; ++s) {
                acc5 += kB5[s] * stages_[static_cast<size_t>(s)][i];
                acc4 += kB4[s] * stages_[static_cast<size_t>(s)][i];
            }
            x_new[i] = x[i] + h * acc5;
            err[i] = h * (acc5 - acc4);
        }
    }

    void eval_stage0(std::span<const double> x, double t) {
        field_(x, t, stages_[0]);
        ++nfe_;
    }

    // FSAL: the last stage of an accepted step is v(x_new, t_new).
    void promote_last_stage() { std::swap(stages_[0], stages_[6]); }

private:
    const FieldFn& field_;
    int64_t& nfe_;
    std::vector<std::vector<double>> stages_;
    std::vector<double> tmp_;
};

// Hairer-Norsett-Wanner starting step selection for the adaptive solver:
// size the first step from the local derivative magnitude and a one-step
// Euler probe of its curvature.
double initial_step(const FieldFn& field, const std::vector<double>& x0, double t0,
                    double span, const SolverSpec& spec, int64_t& nfe) {
    const size_t dim = x0.size();
    const double dir_sign = span > 0.0 ? 1.0 : -1.0;
    std::vector<double> f0(dim), f1(dim), x1(dim);
    field(x0, t0, f0);
    ++nfe;
    double d0 = 0.0, d1 = 0.0;
    for (size_t i = 0; i < dim; ++i) {
        const double scale = spec.abs_tol + spec.rel_tol * std::fabs(x0[i]);
        d0 += (x0[i] / scale) * (x0[i] / scale);
        d1 += (f0[i] / scale) * (f0[i] / scale);
    }
    d0 = std::sqrt(d0 / static_cast<double>(dim));
    d1 = std::sqrt(d1 / static_cast<double>(dim));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::fabs(span));
    for (size_t i = 0; i < dim; ++i) x1[i] = x0[i] + dir_sign * h0 * f0[i];
    field(x1, t0 + dir_sign * h0, f1);
    ++nfe;
    double d2 = 0.0;
    for (size_t i = 0; i < dim; ++i) {
        const double scale = spec.abs_tol + spec.rel_tol * std::fabs(x0[i]);
        const double df = (f1[i] - f0[i]) / scale;
        d2 += df * df;
    }
    d2 = std::sqrt(d2 / static_cast<double>(dim)) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15) {
        h1 = std::max(1e-6, h0 * 1e-3);
    } else {
        h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
    }
    return dir_sign * std::min({100.0 * h0, h1, std::fabs(span)});
}

}  // namespace

std::vector<double> euler_step(const FieldFn& field, std::span<const double> x, double t0,
                               double t1) {
    if (t0 == t1) throw UsageError("euler_step: t0 == t1");
    std::vector<double> v(x.size());
    field(x, t0, v);
    double norm2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) norm2 += x[i] * x[i];
    for (double vi : v) {
        if (!std::isfinite(vi)) {
            throw NumericalError("euler_step: non-finite velocity at t=" + std::to_string(t0) +
                                 ", |x|=" + std::to_string(std::sqrt(norm2)));
        }
    }
    std::vector<double> out(x.begin(), x.end());
    const double h = t1 - t0;
    for (size_t i = 0; i < out.size(); ++i) out[i] += h * v[i];
    return out;
}

IntegrateResult integrate(const FieldFn& field, std::span<const double> x_start,
                          const SolverSpec& spec) {
    spec.validate();
    IntegrateResult res;
    res.state.assign(x_start.begin(), x_start.end());
    const double t0 = spec.direction == Direction::Forward ? 0.0 : 1.0;
    const double t1 = 1.0 - t0;
    res.t = t0;
    Recorder rec{spec.record ? &res.trajectory : nullptr};
    rec.push(t0, res.state);

    const size_t dim = res.state.size();
    std::vector<double> v(dim), v2(dim), mid(dim);

    std::vector<double> next(dim);
    if (spec.method == SolverMethod::Euler) {
        for (int64_t n = 0; n < spec.steps; ++n) {
            const double ta = grid_time(n, spec.steps, spec.direction);
            const double tb = grid_time(n + 1, spec.steps, spec.direction);
            field(res.state, ta, v);
            ++res.nfe;
            for (size_t i = 0; i < dim; ++i) next[i] = res.state[i] + (tb - ta) * v[i];
            if (!finite(next)) {
                res.status = SolveStatus::NonFinite;
                break;
            }
            res.state = next;
            res.t = tb;
            rec.push(tb, res.state);
        }
    } else if (spec.method == SolverMethod::Midpoint) {
        for (int64_t n = 0; n < spec.steps; ++n) {
            const double ta = grid_time(n, spec.steps, spec.direction);
            const double tb = grid_time(n + 1, spec.steps, spec.direction);
            const double h = tb - ta;
            field(res.state, ta, v);
            ++res.nfe;
            for (size_t i = 0; i < dim; ++i) mid[i] = res.state[i] + 0.5 * h * v[i];
            field(mid, ta + 0.5 * h, v2);
            ++res.nfe;
            for (size_t i = 0; i < dim; ++i) next[i] = res.state[i] + h * v2[i];
            if (!finite(next)) {
                res.status = SolveStatus::NonFinite;
                break;
            }
            res.state = next;
            res.t = tb;
            rec.push(tb, res.state);
        }
    } else {
        Rk45Stepper stepper(field, dim, res.nfe);
        std::vector<double> x_new, err;
        stepper.eval_stage0(res.state, t0);
        if (spec.steps > 0) {
            // Fixed-step Dormand-Prince (error estimate unused).
            for (int64_t n = 0; n < spec.steps; ++n) {
                const double ta = grid_time(n, spec.steps, spec.direction);
                const double tb = grid_time(n + 1, spec.steps, spec.direction);
                stepper.step(res.state, ta, tb - ta, x_new, err);
                if (!finite(x_new)) {
                    res.status = SolveStatus::NonFinite;
                    break;
                }
                res.state = x_new;
                res.t = tb;
                rec.push(tb, res.state);
                stepper.promote_last_stage();
            }
        } else {
            const double span = t1 - t0;
            const double dir_sign = span > 0.0 ? 1.0 : -1.0;
            double t = t0;
            double h = initial_step(field, res.state, t0, span, spec, res.nfe);
            constexpr double kMinStep = 1e-10;
            constexpr int64_t kMaxEvals = 20'000'000;
            while (dir_sign * (t1 - t) > 1e-14) {
                if (std::fabs(h) > std::fabs(t1 - t)) h = t1 - t;
                if (std::fabs(h) < kMinStep) {
                    res.status = SolveStatus::StepUnderflow;
                    break;
                }
                if (res.nfe > kMaxEvals) {
                    throw NumericalError("adaptive solver exceeded evaluation budget");
                }
                stepper.step(res.state, t, h, x_new, err);
                if (!finite(x_new)) {
                    // Shrink and retry; persistent non-finite states end in
                    // step underflow with the last good state preserved.
                    h *= 0.5;
                    continue;
                }
                double err_norm = 0.0;
                for (size_t i = 0; i < dim; ++i) {
                    const double scale =
                        spec.abs_tol +
                        spec.rel_tol * std::max(std::fabs(res.state[i]), std::fabs(x_new[i]));
                    const double e = err[i] / scale;
                    err_norm += e * e;
                }
                err_norm = std::sqrt(err_norm / static_cast<double>(dim));
                if (err_norm <= 1.0) {
                    t += h;
                    res.state = x_new;
                    res.t = t;
                    rec.push(t, res.state);
                    stepper.promote_last_stage();
                    const double grow =
                        err_norm == 0.0 ? 5.0
                                        : std::min(5.0, std::max(0.2, 0.9 * std::pow(err_norm, -0.2)));
                    h *= grow;
                } else {
                    h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                }
            }
            if (res.status == SolveStatus::Ok) {
                res.t = t1;  // snap the ~1 ulp residue from the final clamp
                if (rec.traj != nullptr && !rec.traj->times.empty()) {
                    rec.traj->times.back() = t1;
                }
            }
        }
    }
    if (res.status == SolveStatus::Ok && !finite(res.state)) {
        res.status = SolveStatus::NonFinite;
    }
    res.trajectory.nfe = res.nfe;
    res.trajectory.solver_meta = spec.describe();
    return res;
}

IntegrateResult integrate_span(const FieldFn& field, std::span<const double> x_start,
                               double ta, double tb, const SolverSpec& spec) {
    if (ta == tb) throw UsageError("integrate_span: empty time span");
    // Substituting t = ta + s*(tb - ta) turns the span into a forward unit
    // solve of dx/ds = (tb - ta) * v(x, t(s)).
    const double scale = tb - ta;
    FieldFn remapped = [&field, ta, scale](std::span<const double> x, double s,
                                           std::span<double> out) {
        field(x, ta + s * scale, out);
        for (auto& v : out) v *= scale;
    };
    SolverSpec unit = spec;
    unit.direction = Direction::Forward;
    IntegrateResult res = integrate(remapped, x_start, unit);
    res.t = ta + res.t * scale;
    for (auto& t : res.trajectory.times) t = ta + t * scale;
    return res;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_digest) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trajectory csv: " + path);
    out << "# config_digest=" << config_digest << "\n";
    const size_t dim = traj.states.empty() ? 0 : traj.states[0].size();
    const bool per_dim = dim <= 16;
    out << "t";
    if (per_dim) {
        for (size_t i = 0; i < dim; ++i) out << ",x" << i;
    } else {
        out << ",norm";
    }
    out << "\n";
    char buf[32];
    for (size_t n = 0; n < traj.times.size(); ++n) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[n]);
        out << buf;
        if (per_dim) {
            for (double v : traj.states[n]) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << "," << buf;
            }
        } else {
            double s = 0.0;
            for (double v : traj.states[n]) s += v * v;
            std::snprintf(buf, sizeof(buf), "%.17g", std::sqrt(s));
            out << "," << buf;
        }
        out << "\n";
    }
    out << "NFE," << traj.nfe << "\n";
}

}  // namespace rf
