#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rf {

// Per-row laser elevation angles of the sensor, top row first, strictly
// decreasing. Azimuth is implicit: W uniform bins over [-pi, pi), column 0
// at the +pi edge and increasing column index sweeping clockwise.
class BeamTable {
public:
    explicit BeamTable(std::vector<double> elevations_rad);

    static BeamTable uniform(int64_t rows, double top_deg, double bottom_deg);
    // Text file, one elevation in degrees per line, top row first.
    static BeamTable load(const std::string& path);
    void save(const std::string& path) const;

    int64_t rows() const { return static_cast<int64_t>(elev_.size()); }
    double elevation(int64_t row) const { return elev_[static_cast<size_t>(row)]; }
    const std::vector<double>& elevations() const { return elev_; }

    // Center azimuth of a column with the given total column count.
    static double azimuth(int64_t col, int64_t cols);

    // Nearest beam row for an elevation angle.
    int64_t nearest_row(double elevation_rad) const;

    // Table with consecutive row pairs averaged (token grids after merging).
    BeamTable merged_pairs() const;

private:
    std::vector<double> elev_;
};

}  // namespace rf
