#include "rf/nets/rope.hpp"

#include <cmath>

#include "rf/core/error.hpp"

namespace rf {

std::vector<double> rope_phases(const BeamTable& beams, int64_t grid_cols, int64_t pairs) {
    if (pairs < 2 || pairs % 2 != 0) {
        throw UsageError("rope phases: pair count must be even and >= 2");
    }
    const int64_t rows = beams.rows();
    const int64_t half = pairs / 2;
    std::vector<double> harmonics(static_cast<size_t>(half));
    double k = 1.0;
    for (int64_t i = 0; i < half; ++i) {
        harmonics[static_cast<size_t>(i)] = k;
        k *= 2.0;  // 1, 2, 4, ... keeps every pair 2*pi periodic
    }
    std::vector<double> phases;
    phases.reserve(static_cast<size_t>(rows * grid_cols * pairs));
    for (int64_t r = 0; r < rows; ++r) {
        const double elev = beams.elevation(r);
        for (int64_t c = 0; c < grid_cols; ++c) {
            const double azim = BeamTable::azimuth(c, grid_cols);
            for (int64_t i = 0; i < half; ++i)
                phases.push_back(harmonics[static_cast<size_t>(i)] * azim);
            for (int64_t i = 0; i < half; ++i)
                phases.push_back(harmonics[static_cast<size_t>(i)] * elev);
        }
    }
    return phases;
}

RopeTable rope_table(const BeamTable& beams, int64_t grid_cols, int64_t pairs, int64_t heads) {
    const auto phases = rope_phases(beams, grid_cols, pairs);
    const int64_t tokens = beams.rows() * grid_cols;
    const int64_t half_c = pairs * heads;
    std::vector<double> cv(static_cast<size_t>(tokens * half_c));
    std::vector<double> sv(static_cast<size_t>(tokens * half_c));
    for (int64_t t = 0; t < tokens; ++t) {
        for (int64_t h = 0; h < heads; ++h) {
            for (int64_t p = 0; p < pairs; ++p) {
                const double phi = phases[static_cast<size_t>(t * pairs + p)];
                const auto at = static_cast<size_t>(t * half_c + h * pairs + p);
                cv[at] = std::cos(phi);
                sv[at] = std::sin(phi);
            }
        }
    }
    RopeTable tab;
    tab.cos_v = Tensor::from({tokens, half_c}, std::move(cv));
    tab.sin_v = Tensor::from({tokens, half_c}, std::move(sv));
    return tab;
}

}  // namespace rf
