#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace trimodal {

// FNV-1a, 64-bit. Used for content fingerprints and config hashes.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64: tiny platform-independent PRNG. Stream depends only on the
// 64-bit state, so sequences are bit-identical everywhere.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 bits of entropy.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// CRC-32 (IEEE 802.3 polynomial), incremental.
class Crc32 {
public:
    Crc32() : crc_(0xffffffffU) {}

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            crc_ = table()[(crc_ ^ p[i]) & 0xffU] ^ (crc_ >> 8);
        }
    }

    void update(std::string_view bytes) { update(bytes.data(), bytes.size()); }

    std::uint32_t value() const { return crc_ ^ 0xffffffffU; }

    static std::uint32_t of(std::string_view bytes) {
        Crc32 c;
        c.update(bytes);
        return c.value();
    }

private:
    static const std::array<std::uint32_t, 256>& table() {
        static const std::array<std::uint32_t, 256> t = [] {
            std::array<std::uint32_t, 256> out{};
            for (std::uint32_t i = 0; i < 256; ++i) {
                std::uint32_t c = i;
                for (int k = 0; k < 8; ++k) {
                    c = (c & 1U) ? (0xedb88320U ^ (c >> 1)) : (c >> 1);
                }
                out[i] = c;
            }
            return out;
        }();
        return t;
    }

    std::uint32_t crc_;
};

}  // namespace trimodal
