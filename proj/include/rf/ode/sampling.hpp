#pragma once

#include <vector>

#include "rf/flow/stage.hpp"
#include "rf/nets/velocity_model.hpp"
#include "rf/ode/solver.hpp"

namespace rf {

// Adapts a velocity model to the integrator's field interface.
FieldFn model_field(VelocityModel& model);

struct SampleBatch {
    Tensor states;              // [n, *sample_shape]
    std::vector<int64_t> nfe;   // per sample
    std::vector<Trajectory> trajectories;  // when spec.record
};

// Draws n latents from a seeded standard normal and integrates each one
// independently. Distilled stages only accept the k-step Euler spec they
// were trained for.
SampleBatch sample(VelocityModel& model, const FlowStage& stage, int64_t n,
                   const SolverSpec& spec, uint64_t seed);

// Reverse-time integration of a data sample into its latent embedding.
IntegrateResult invert(VelocityModel& model, std::span<const double> x1,
                       const SolverSpec& spec);

// Spherical linear interpolation between latent vectors. Rejects zero or
// near-antipodal endpoints; nearly parallel endpoints fall back to the
// linear chord, where the great-circle arc is degenerate.
std::vector<double> slerp(std::span<const double> z0, std::span<const double> z1, double lambda);

// Rejects solver specs a stage does not support.
void validate_stage_solver(const FlowStage& stage, const SolverSpec& spec);

}  // namespace rf
