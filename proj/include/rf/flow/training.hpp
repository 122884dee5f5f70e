#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "rf/flow/data.hpp"
#include "rf/flow/losses.hpp"
#include "rf/flow/pair_dataset.hpp"
#include "rf/flow/time_dist.hpp"
#include "rf/nets/velocity_model.hpp"
#include "rf/tensor/adam.hpp"

namespace rf {

struct TrainConfig {
    int64_t steps = 20000;
    int64_t batch = 256;
    AdamConfig adam;       // lr defaults to 1e-3
    double lr_final = -1;  // >= 0 anneals the rate linearly to this value
    TimeDist time_dist;
    uint64_t seed = 0;
    int64_t log_every = 200;
    std::function<void(int64_t, double)> on_log;  // step, smoothed loss
};

struct TrainResult {
    std::vector<std::pair<int64_t, double>> loss_log;  // (step, smoothed loss)
    double final_loss = 0.0;
};

// Initial flow-matching stage: minimizes the conditional flow matching loss
// over independent (x0 ~ N(0,I), x1 ~ data) pairs with the configured
// timestep distribution (uniform by default).
TrainResult train_1rf(VelocityModel& model, const DataSource& data, const TrainConfig& cfg);

// Reflow stage: pseudo-Huber loss over ode-coupled pairs under the U-shaped
// timestep distribution. The model should start from the parent weights;
// independent pairs are rejected.
TrainResult train_reflow(VelocityModel& model, const PairDataset& pairs,
                         const TrainConfig& cfg);

// Timestep distillation to a k-point grid. Regression inputs are the
// parent's trajectory states at the grid and targets the per-segment parent
// increments scaled by k, so that k Euler steps of the student replay the
// parent endpoint. segment_solver integrates the parent between grid points
// (k > 1).
TrainResult distill(VelocityModel& model, int64_t k, const PairDataset& pairs,
                    VelocityModel& parent, const SolverSpec& segment_solver,
                    const TrainConfig& cfg);

// Evaluates the reflow objective on a batch of pairs without training; used
// for loss-at-initialization checks.
double reflow_loss_value(VelocityModel& model, const PairDataset& pairs,
                         const std::vector<int64_t>& indices, const std::vector<double>& ts);

}  // namespace rf
