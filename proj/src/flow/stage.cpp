#include "rf/flow/stage.hpp"

#include "rf/core/error.hpp"

namespace rf {

std::string FlowStage::tag() const {
    switch (kind) {
        case StageKind::OneRF: return "1-RF";
        case StageKind::TwoRF: return "2-RF";
        case StageKind::Distilled: return std::to_string(k) + "-TD";
    }
    throw Error("unreachable stage kind");
}

FlowStage FlowStage::from_tag(const std::string& tag) {
    FlowStage s;
    if (tag == "1-RF") {
        s.kind = StageKind::OneRF;
        return s;
    }
    if (tag == "2-RF") {
        s.kind = StageKind::TwoRF;
        return s;
    }
    const auto pos = tag.find("-TD");
    if (pos != std::string::npos && pos > 0 && pos + 3 == tag.size()) {
        try {
            s.k = std::stoll(tag.substr(0, pos));
        } catch (const std::exception&) {
            throw UsageError("bad stage tag: " + tag);
        }
        if (s.k < 1) throw UsageError("distillation step count must be >= 1, got " + tag);
        s.kind = StageKind::Distilled;
        return s;
    }
    throw UsageError("unknown stage tag: " + tag + " (expected 1-RF, 2-RF, or <k>-TD)");
}

std::vector<double> FlowStage::step_grid() const {
    if (kind != StageKind::Distilled) {
        throw UsageError("step grid only defined for distilled stages");
    }
    std::vector<double> grid(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i)
        grid[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(k);
    return grid;
}

void FlowStage::validate() const {
    if (kind == StageKind::Distilled && k < 1) {
        throw UsageError("distilled stage requires k >= 1");
    }
    if (kind != StageKind::OneRF && parent_digest.empty()) {
        throw UsageError(tag() + " stage requires a parent checkpoint reference");
    }
}

}  // namespace rf
