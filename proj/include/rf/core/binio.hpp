#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rf/core/error.hpp"

namespace rf {

// Little-endian binary I/O helpers. All file formats in this project are
// little-endian regardless of host order.

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts need byte swaps in binio");

template <typename T>
void write_le(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw DataError("truncated read of " + what + " at byte offset " +
                        std::to_string(static_cast<long long>(in.tellg())));
    }
    return v;
}

inline void write_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* p, size_t n, const std::string& what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
        throw DataError("truncated read of " + what);
    }
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le<uint32_t>(out, static_cast<uint32_t>(s.size()));
    write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in, const std::string& what) {
    const auto n = read_le<uint32_t>(in, what + " length");
    std::string s(n, '\0');
    read_bytes(in, s.data(), n, what);
    return s;
}

}  // namespace rf
