#include "rf/flow/time_dist.hpp"

#include <cmath>

#include "rf/core/error.hpp"

namespace rf {

double TimeDist::icdf(double f) const {
    if (f < 0.0 || f > 1.0) throw UsageError("time dist: quantile outside [0,1]");
    if (kind == TimeDistKind::Uniform) return f;
    // F(t) = (sinh(a(t-1/2)) + sinh(a/2)) / (2 sinh(a/2))
    const double s = std::sinh(0.5 * a);
    return 0.5 + std::asinh((2.0 * f - 1.0) * s) / a;
}

double TimeDist::sample(Rng& rng) const { return icdf(rng.uniform()); }

double TimeDist::density(double t) const {
    if (t < 0.0 || t > 1.0) return 0.0;
    if (kind == TimeDistKind::Uniform) return 1.0;
    const double z = 2.0 * std::sinh(0.5 * a) / a;
    return std::cosh(a * (t - 0.5)) / z;
}

std::string TimeDist::describe() const {
    if (kind == TimeDistKind::Uniform) return "uniform";
    return "u-shaped a=" + std::to_string(a);
}

TimeDist TimeDist::from_string(const std::string& s, double a) {
    TimeDist d;
    d.a = a;
    if (s == "uniform") {
        d.kind = TimeDistKind::Uniform;
    } else if (s == "u-shaped" || s == "ushaped") {
        d.kind = TimeDistKind::UShaped;
    } else {
        throw UsageError("unknown time distribution: " + s);
    }
    return d;
}

}  // namespace rf
