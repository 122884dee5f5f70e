#include "rf/core/digest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "rf/core/error.hpp"

namespace rf {

std::string digest_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string Fnv1a::hex() const { return digest_hex(h_); }

std::string digest_bytes(std::span<const unsigned char> bytes) {
    Fnv1a h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string digest_string(const std::string& s) {
    Fnv1a h;
    h.update(s);
    return h.hex();
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for digest: " + path);
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<size_t>(in.gcount()));
    }
    return h.hex();
}

}  // namespace rf
