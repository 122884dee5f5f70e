#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rf/nets/beam_table.hpp"
#include "rf/tensor/tensor.hpp"

namespace rf {

// 2-channel equirectangular scan: log-scaled range and reflectance, both in
// [0, 1] on valid pixels, with a raydrop mask for missing returns. Row r
// follows beam r of the table; column c covers the azimuth bin centered at
// BeamTable::azimuth(c, W).
struct RangeImage {
    int64_t height = 0;
    int64_t width = 0;
    double x_max = 80.0;
    BeamTable beams;
    std::vector<double> log_range;    // H*W row-major
    std::vector<double> reflectance;  // H*W row-major
    std::vector<uint8_t> mask;        // H*W, 1 = valid return, 0 = raydrop

    RangeImage(BeamTable beam_table, int64_t w, double xmax);

    int64_t pixels() const { return height * width; }
    int64_t valid_count() const;
    bool valid(int64_t row, int64_t col) const {
        return mask[static_cast<size_t>(row * width + col)] != 0;
    }
};

// Binary format: magic, H, W, channel count, x_max (f32), then row-major
// little-endian f32 values per channel, then the raydrop mask as packed bits
// (row-major, LSB first within each byte). The beam table travels separately.
void save_range_image(const std::string& path, const RangeImage& img);
RangeImage load_range_image(const std::string& path, const BeamTable& beams);

}  // namespace rf
