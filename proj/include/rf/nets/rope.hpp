#pragma once

#include <cstdint>
#include <vector>

#include "rf/nets/beam_table.hpp"
#include "rf/tensor/tensor.hpp"

namespace rf {

// Rotation angles for relative positional encoding on a token grid. Each
// token carries `pairs` phases: the first half are harmonics (1, 2, 4, ...)
// of the token's azimuth angle, so relative attention is exactly 2*pi
// periodic in the horizontal direction; the second half are the same
// harmonics of the row's beam elevation angle.
std::vector<double> rope_phases(const BeamTable& beams, int64_t grid_cols, int64_t pairs);

// cos/sin of the per-token phases tiled across heads, shaped [tokens, C/2]
// for channel width C = pairs * 2 * heads.
struct RopeTable {
    Tensor cos_v, sin_v;
};
RopeTable rope_table(const BeamTable& beams, int64_t grid_cols, int64_t pairs, int64_t heads);

}  // namespace rf
