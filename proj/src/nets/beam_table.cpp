#include "rf/nets/beam_table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rf/core/error.hpp"

namespace rf {

BeamTable::BeamTable(std::vector<double> elevations_rad) : elev_(std::move(elevations_rad)) {
    if (elev_.empty()) throw UsageError("beam table: no rows");
    for (size_t i = 0; i < elev_.size(); ++i) {
        if (!std::isfinite(elev_[i])) throw UsageError("beam table: non-finite elevation");
        if (i > 0 && elev_[i] >= elev_[i - 1]) {
            throw UsageError("beam table: elevations must strictly decrease, row " +
                             std::to_string(i) + " does not");
        }
    }
}

BeamTable BeamTable::uniform(int64_t rows, double top_deg, double bottom_deg) {
    if (rows < 1) throw UsageError("beam table: rows must be >= 1");
    std::vector<double> elev(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double f = rows > 1 ? static_cast<double>(r) / static_cast<double>(rows - 1) : 0.0;
        elev[static_cast<size_t>(r)] = (top_deg + f * (bottom_deg - top_deg)) * M_PI / 180.0;
    }
    return BeamTable(std::move(elev));
}

BeamTable BeamTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open beam table: " + path);
    std::vector<double> elev;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double deg;
        if (ls >> deg) elev.push_back(deg * M_PI / 180.0);
    }
    if (elev.empty()) throw DataError("beam table has no angles: " + path);
    return BeamTable(std::move(elev));
}

void BeamTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write beam table: " + path);
    char buf[64];
    for (double e : elev_) {
        std::snprintf(buf, sizeof(buf), "%.10g\n", e * 180.0 / M_PI);
        out << buf;
    }
}

double BeamTable::azimuth(int64_t col, int64_t cols) {
    return M_PI - (static_cast<double>(col) + 0.5) * 2.0 * M_PI / static_cast<double>(cols);
}

int64_t BeamTable::nearest_row(double elevation_rad) const {
    int64_t best = 0;
    double best_d = std::fabs(elevation_rad - elev_[0]);
    for (size_t r = 1; r < elev_.size(); ++r) {
        const double d = std::fabs(elevation_rad - elev_[r]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int64_t>(r);
        }
    }
    return best;
}

BeamTable BeamTable::merged_pairs() const {
    if (elev_.size() % 2 != 0) throw UsageError("beam table: cannot merge odd row count");
    std::vector<double> merged(elev_.size() / 2);
    for (size_t r = 0; r < merged.size(); ++r) {
        merged[r] = 0.5 * (elev_[2 * r] + elev_[2 * r + 1]);
    }
    return BeamTable(std::move(merged));
}

}  // namespace rf
