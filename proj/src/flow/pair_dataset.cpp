#include "rf/flow/pair_dataset.hpp"

#include <cstring>
#include <fstream>

#include "rf/core/binio.hpp"

namespace rf {

namespace {
constexpr char kMagic[9] = "RFPAIR01";
}

std::span<const double> PairDataset::x0_at(int64_t i) const {
    const int64_t d = sample_numel();
    return {x0.data() + i * d, static_cast<size_t>(d)};
}

std::span<const double> PairDataset::x1_at(int64_t i) const {
    const int64_t d = sample_numel();
    return {x1.data() + i * d, static_cast<size_t>(d)};
}

void PairDataset::save(const std::string& path, int value_width) const {
    if (value_width != 4 && value_width != 8) {
        throw UsageError("pair file value width must be 4 or 8");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open pair file for writing: " + path);
    write_bytes(out, kMagic, 8);
    write_le<uint32_t>(out, static_cast<uint32_t>(value_width));
    write_le<uint64_t>(out, static_cast<uint64_t>(count()));
    write_le<uint32_t>(out, static_cast<uint32_t>(sample_shape.size()));
    for (int64_t e : sample_shape) write_le<int64_t>(out, e);
    write_le<uint8_t>(out, kind == PairingKind::OdeCoupled ? 1 : 0);
    write_string(out, solver_meta);
    write_le<uint64_t>(out, seed);
    const int64_t d = sample_numel();
    for (int64_t i = 0; i < count(); ++i) {
        auto a = x0_at(i);
        auto b = x1_at(i);
        if (value_width == 8) {
            for (int64_t j = 0; j < d; ++j) write_le<double>(out, a[static_cast<size_t>(j)]);
            for (int64_t j = 0; j < d; ++j) write_le<double>(out, b[static_cast<size_t>(j)]);
        } else {
            for (int64_t j = 0; j < d; ++j)
                write_le<float>(out, static_cast<float>(a[static_cast<size_t>(j)]));
            for (int64_t j = 0; j < d; ++j)
                write_le<float>(out, static_cast<float>(b[static_cast<size_t>(j)]));
        }
    }
    if (!out) throw DataError("write failure on pair file: " + path);
}

PairDataset PairDataset::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open pair file: " + path);
    char magic[8];
    read_bytes(in, magic, 8, "pair file magic");
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw DataError("bad pair file magic in " + path + " at byte offset 0");
    }
    const auto width = read_le<uint32_t>(in, "pair value width");
    if (width != 4 && width != 8) throw DataError("bad pair file value width");
    const auto count = read_le<uint64_t>(in, "pair count");
    const auto rank = read_le<uint32_t>(in, "pair shape rank");
    PairDataset ds;
    ds.sample_shape.resize(rank);
    for (auto& e : ds.sample_shape) e = read_le<int64_t>(in, "pair shape extent");
    ds.kind = read_le<uint8_t>(in, "pairing kind") == 1 ? PairingKind::OdeCoupled
                                                        : PairingKind::Independent;
    ds.solver_meta = read_string(in, "solver metadata");
    ds.seed = read_le<uint64_t>(in, "pair seed");
    const int64_t d = ds.sample_numel();
    ds.x0.resize(count * static_cast<uint64_t>(d));
    ds.x1.resize(count * static_cast<uint64_t>(d));
    for (uint64_t i = 0; i < count; ++i) {
        double* a = ds.x0.data() + i * static_cast<uint64_t>(d);
        double* b = ds.x1.data() + i * static_cast<uint64_t>(d);
        if (width == 8) {
            for (int64_t j = 0; j < d; ++j) a[j] = read_le<double>(in, "pair value");
            for (int64_t j = 0; j < d; ++j) b[j] = read_le<double>(in, "pair value");
        } else {
            for (int64_t j = 0; j < d; ++j)
                a[j] = static_cast<double>(read_le<float>(in, "pair value"));
            for (int64_t j = 0; j < d; ++j)
                b[j] = static_cast<double>(read_le<float>(in, "pair value"));
        }
    }
    return ds;
}

PairDataset generate_reflow_pairs(const FieldFn& field, const Shape& sample_shape,
                                  int64_t count, const SolverSpec& solver, uint64_t seed,
                                  PairGenStats* stats) {
    if (count < 1) throw UsageError("pair generation: count must be >= 1");
    if (solver.direction != Direction::Forward) {
        throw UsageError("pair generation integrates forward from t=0");
    }
    solver.validate();
    const int64_t d = shape_numel(sample_shape);
    PairDataset ds;
    ds.kind = PairingKind::OdeCoupled;
    ds.sample_shape = sample_shape;
    ds.seed = seed;
    ds.solver_meta = solver.describe();
    ds.x0.reserve(static_cast<size_t>(count * d));
    ds.x1.reserve(static_cast<size_t>(count * d));

    PairGenStats st;
    st.requested = count;
    Rng rng(seed);
    std::vector<double> x0(static_cast<size_t>(d));
    const auto max_skips = static_cast<int64_t>(static_cast<double>(count) * 0.01);
    while (st.generated < count) {
        for (auto& v : x0) v = rng.normal();
        IntegrateResult r = integrate(field, x0, solver);
        if (!r.ok()) {
            ++st.skipped;
            if (st.skipped > max_skips) {
                throw NumericalError("pair generation: " + std::to_string(st.skipped) +
                                     " solver failures exceed 1% of " + std::to_string(count));
            }
            continue;
        }
        ds.x0.insert(ds.x0.end(), x0.begin(), x0.end());
        ds.x1.insert(ds.x1.end(), r.state.begin(), r.state.end());
        ++st.generated;
    }
    if (stats != nullptr) *stats = st;
    return ds;
}

}  // namespace rf
