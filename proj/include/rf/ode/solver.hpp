#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rf/core/error.hpp"

namespace rf {

// Velocity field as seen by the integrator: fills `out` with v(x, t).
using FieldFn = std::function<void(std::span<const double>, double, std::span<double>)>;

enum class SolverMethod { Euler, Midpoint, Rk45 };
enum class Direction { Forward, Reverse };

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

// Integration policy. Fixed-step methods run on the uniform grid t_n = n/N
// (mirrored for reverse); rk45 with steps == 0 is adaptive with the given
// tolerances, and with steps > 0 it takes fixed Dormand-Prince steps.
struct SolverSpec {
    SolverMethod method = SolverMethod::Euler;
    int64_t steps = 0;
    double abs_tol = 1e-5;
    double rel_tol = 1e-5;
    Direction direction = Direction::Forward;
    bool record = false;

    static SolverSpec euler(int64_t steps, Direction dir = Direction::Forward);
    static SolverSpec midpoint(int64_t steps, Direction dir = Direction::Forward);
    static SolverSpec rk45(double abs_tol, double rel_tol, Direction dir = Direction::Forward);
    static SolverSpec rk45_fixed(int64_t steps, Direction dir = Direction::Forward);

    SolverSpec recorded() const {
        SolverSpec s = *this;
        s.record = true;
        return s;
    }

    void validate() const;
    std::string describe() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    int64_t nfe = 0;
    std::string solver_meta;
};

enum class SolveStatus { Ok, StepUnderflow, NonFinite };

struct IntegrateResult {
    std::vector<double> state;  // endpoint, or last good state on failure
    double t = 0.0;
    int64_t nfe = 0;
    SolveStatus status = SolveStatus::Ok;
    Trajectory trajectory;  // populated when spec.record

    bool ok() const { return status == SolveStatus::Ok; }
};

// One explicit Euler update x + (t1 - t0) * v(x, t0); exactly one field
// evaluation. Non-finite velocity aborts with t and the state norm.
std::vector<double> euler_step(const FieldFn& field, std::span<const double> x, double t0,
                               double t1);

IntegrateResult integrate(const FieldFn& field, std::span<const double> x_start,
                          const SolverSpec& spec);

// Integration over an arbitrary time span [ta, tb] (tb < ta runs backward in
// time). The spec's direction is ignored; its method/steps/tolerances apply.
IntegrateResult integrate_span(const FieldFn& field, std::span<const double> x_start,
                               double ta, double tb, const SolverSpec& spec);

// CSV export: t plus per-dimension state for small dims, or the state norm
// for image-sized states; NFE footer row.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_digest);

}  // namespace rf
