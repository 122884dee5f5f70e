#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rf {

enum class StageKind { OneRF, TwoRF, Distilled };

// Provenance of a trained velocity model. 2-RF models reference their 1-RF
// parent; distilled models reference the model they were distilled from and
// record the timestep grid they were trained on.
struct FlowStage {
    StageKind kind = StageKind::OneRF;
    int64_t k = 0;  // step count for distilled stages
    std::string parent_digest;
    std::string config_digest;

    std::string tag() const;
    static FlowStage from_tag(const std::string& tag);

    // {0, 1/k, ..., (k-1)/k} for distilled stages.
    std::vector<double> step_grid() const;

    void validate() const;
};

}  // namespace rf
