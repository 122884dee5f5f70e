#include "rf/nets/window.hpp"

#include <algorithm>

#include "rf/core/error.hpp"

namespace rf {

WindowIndices circular_window_indices(int64_t rows, int64_t cols, int64_t window_rows,
                                      int64_t window_cols) {
    if (rows < 1 || window_rows < 1 || window_cols < 1) {
        throw UsageError("window indices: non-positive extent");
    }
    if (cols < window_cols) {
        throw UsageError("window indices: grid has " + std::to_string(cols) +
                         " columns, narrower than the " + std::to_string(window_cols) +
                         "-column window");
    }
    WindowIndices w;
    w.grid_rows = rows;
    w.grid_cols = cols;
    w.window_rows = std::min(window_rows, rows);
    w.window_cols = window_cols;
    const int64_t half_c = window_cols / 2;
    w.idx.reserve(static_cast<size_t>(rows * cols * w.window_rows * window_cols));
    for (int64_t r = 0; r < rows; ++r) {
        // Shift the row window inside [0, rows) at the edges.
        const int64_t r0 = std::clamp(r - w.window_rows / 2, int64_t{0}, rows - w.window_rows);
        for (int64_t c = 0; c < cols; ++c) {
            for (int64_t dr = 0; dr < w.window_rows; ++dr) {
                for (int64_t dc = -half_c; dc <= half_c; ++dc) {
                    const int64_t nc = ((c + dc) % cols + cols) % cols;
                    w.idx.push_back((r0 + dr) * cols + nc);
                }
            }
        }
    }
    return w;
}

}  // namespace rf
