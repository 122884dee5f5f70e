#pragma once

#include <string>

#include "rf/core/rng.hpp"

namespace rf {

enum class TimeDistKind { Uniform, UShaped };

// Timestep distribution for training. The U-shaped form has density
// proportional to cosh(a*(t - 1/2)) on [0, 1]: symmetric about 1/2 and
// up-weighting both endpoints, sampled by closed-form inverse CDF.
struct TimeDist {
    TimeDistKind kind = TimeDistKind::Uniform;
    double a = 4.0;

    double sample(Rng& rng) const;

    // Inverse CDF at quantile f in [0, 1].
    double icdf(double f) const;

    // Normalized density at t in [0, 1].
    double density(double t) const;

    std::string describe() const;
    static TimeDist from_string(const std::string& s, double a = 4.0);
};

}  // namespace rf
