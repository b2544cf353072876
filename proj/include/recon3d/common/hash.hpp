#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace recon3d {

/// FNV-1a 64-bit content hash. Stable across platforms; used for checkpoint
/// manifests, freeze contracts, and run records.
class Fnv64 {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }

    void update(const std::string& s) { update(s.data(), s.size()); }

    std::uint64_t digest() const { return h_; }

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string out(16, '0');
        std::uint64_t v = h_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = k[v & 0xf];
            v >>= 4;
        }
        return out;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string fnv64_hex(const void* data, std::size_t n) {
    Fnv64 h;
    h.update(data, n);
    return h.hex();
}

inline std::uint64_t str_hash(const std::string& s) {
    Fnv64 h;
    h.update(s);
    return h.digest();
}

}  // namespace recon3d
