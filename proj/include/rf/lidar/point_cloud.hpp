#pragma once

#include <string>
#include <vector>

namespace rf {

struct Point {
    double x = 0.0, y = 0.0, z = 0.0;  // meters
    double reflectance = 0.0;          // [0, 1]
};

using PointCloud = std::vector<Point>;

// Flat binary of consecutive (x, y, z, reflectance) little-endian 32-bit
// float quadruplets.
void save_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_point_cloud(const std::string& path);

}  // namespace rf
