#include "rf/tensor/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rf/core/binio.hpp"

namespace rf {

constexpr char CheckpointFormat::kMagic[9];

void save_checkpoint(const std::string& path, const ParamMap& params, int value_width) {
    if (value_width != 4 && value_width != 8) {
        throw UsageError("checkpoint value width must be 4 or 8, got " +
                         std::to_string(value_width));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    write_bytes(out, CheckpointFormat::kMagic, 8);
    write_le<uint32_t>(out, CheckpointFormat::kVersion);
    write_le<uint32_t>(out, static_cast<uint32_t>(value_width));
    write_le<uint64_t>(out, params.size());
    for (const auto& [name, t] : params) {
        write_string(out, name);
        write_le<uint32_t>(out, static_cast<uint32_t>(t.rank()));
        for (int64_t e : t.shape()) write_le<int64_t>(out, e);
        if (value_width == 8) {
            for (double v : t.data()) write_le<double>(out, v);
        } else {
            for (double v : t.data()) write_le<float>(out, static_cast<float>(v));
        }
    }
    if (!out) throw DataError("write failure on checkpoint: " + path);
}

ParamMap load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    read_bytes(in, magic, 8, "checkpoint magic");
    if (std::memcmp(magic, CheckpointFormat::kMagic, 8) != 0) {
        throw DataError("bad checkpoint magic in " + path + " at byte offset 0");
    }
    const auto version = read_le<uint32_t>(in, "checkpoint version");
    if (version != CheckpointFormat::kVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto width = read_le<uint32_t>(in, "checkpoint value width");
    if (width != 4 && width != 8) {
        throw DataError("bad checkpoint value width " + std::to_string(width));
    }
    const auto count = read_le<uint64_t>(in, "checkpoint tensor count");
    ParamMap params;
    for (uint64_t i = 0; i < count; ++i) {
        const std::string name = read_string(in, "tensor name");
        const auto rank = read_le<uint32_t>(in, "tensor rank");
        Shape shape(rank);
        for (auto& e : shape) e = read_le<int64_t>(in, "tensor extent");
        const auto n = static_cast<size_t>(shape_numel(shape));
        std::vector<double> values(n);
        if (width == 8) {
            for (auto& v : values) v = read_le<double>(in, "tensor value");
        } else {
            for (auto& v : values) v = static_cast<double>(read_le<float>(in, "tensor value"));
        }
        params.add(name, Tensor::from(std::move(shape), std::move(values)));
    }
    return params;
}

void load_checkpoint_into(const std::string& path, ParamMap& params) {
    ParamMap loaded = load_checkpoint(path);
    if (loaded.size() != params.size()) {
        throw DataError("checkpoint " + path + " has " + std::to_string(loaded.size()) +
                        " tensors, expected " + std::to_string(params.size()));
    }
    for (auto& [name, t] : params) {
        const Tensor& src = loaded.at(name);
        if (src.shape() != t.shape()) {
            throw DataError("checkpoint tensor '" + name + "' has shape " +
                            shape_str(src.shape()) + ", expected " + shape_str(t.shape()));
        }
        std::copy(src.data().begin(), src.data().end(), t.mut_data().begin());
    }
}

}  // namespace rf
