#pragma once

#include <string>

#include "rf/tensor/params.hpp"

namespace rf {

// Flat binary checkpoint: magic, version, value width (4 or 8 bytes), tensor
// count, then per tensor: name, rank, 64-bit extents, little-endian IEEE
// values of the declared width. Tensors are written in name order.
struct CheckpointFormat {
    static constexpr char kMagic[9] = "RFCKPT01";
    static constexpr uint32_t kVersion = 1;
};

void save_checkpoint(const std::string& path, const ParamMap& params, int value_width = 8);

// Loads into a fresh map; all tensors come back gradient-tracked.
ParamMap load_checkpoint(const std::string& path);

// Loads into an existing map whose names/shapes must match exactly.
void load_checkpoint_into(const std::string& path, ParamMap& params);

}  // namespace rf
