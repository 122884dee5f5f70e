#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace rf {

// 64-bit FNV-1a. Used for config digests and artifact fingerprints;
// not cryptographic, just a stable identity.
class Fnv1a {
public:
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    uint64_t value() const { return h_; }
    std::string hex() const;

private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string digest_hex(uint64_t v);
std::string digest_bytes(std::span<const unsigned char> bytes);
std::string digest_string(const std::string& s);
// Digest of a file's contents. Throws DataError if unreadable.
std::string digest_file(const std::string& path);

}  // namespace rf
