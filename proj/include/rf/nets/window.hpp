#pragma once

#include <cstdint>
#include <vector>

namespace rf {

// Neighbor table for sliding-window attention on a token grid. Columns wrap
// circularly; rows clamp by shifting the window so it stays inside the grid
// (no vertical wrap). Every token sees the same neighborhood size.
struct WindowIndices {
    int64_t grid_rows = 0;
    int64_t grid_cols = 0;
    int64_t window_rows = 0;  // effective, after clamping to grid_rows
    int64_t window_cols = 0;
    std::vector<int64_t> idx;  // [grid_rows*grid_cols * window_rows*window_cols]

    int64_t tokens() const { return grid_rows * grid_cols; }
    int64_t neighborhood() const { return window_rows * window_cols; }
};

WindowIndices circular_window_indices(int64_t rows, int64_t cols, int64_t window_rows = 3,
                                      int64_t window_cols = 9);

}  // namespace rf
