#pragma once

#include <span>
#include <string>
#include <vector>

#include "rf/core/rng.hpp"
#include "rf/ode/solver.hpp"
#include "rf/tensor/tensor.hpp"

namespace rf {

enum class PairingKind { Independent, OdeCoupled };

// (x0, x1) training pairs. Ode-coupled pairs satisfy x1 = solve(x0, 0 -> 1)
// under the generating model and solver recorded in the metadata, and are
// reproducible from the stored seed.
struct PairDataset {
    PairingKind kind = PairingKind::Independent;
    Shape sample_shape;
    uint64_t seed = 0;
    std::string solver_meta;
    std::vector<double> x0;  // [count * sample_numel], row-major
    std::vector<double> x1;

    int64_t sample_numel() const { return shape_numel(sample_shape); }
    int64_t count() const {
        return sample_numel() == 0 ? 0 : static_cast<int64_t>(x0.size()) / sample_numel();
    }
    std::span<const double> x0_at(int64_t i) const;
    std::span<const double> x1_at(int64_t i) const;

    // Binary file: header (magic, value width, count, shape, pairing kind,
    // solver metadata, seed) then consecutive little-endian x0/x1 arrays
    // per pair.
    void save(const std::string& path, int value_width = 4) const;
    static PairDataset load(const std::string& path);
};

struct PairGenStats {
    int64_t requested = 0;
    int64_t generated = 0;
    int64_t skipped = 0;  // solver failures
};

// Integrates seeded standard-normal latents through the field to produce
// ode-coupled pairs. Solver failures skip the pair; more than 1% skips
// aborts.
PairDataset generate_reflow_pairs(const FieldFn& field, const Shape& sample_shape,
                                  int64_t count, const SolverSpec& solver, uint64_t seed,
                                  PairGenStats* stats = nullptr);

}  // namespace rf
