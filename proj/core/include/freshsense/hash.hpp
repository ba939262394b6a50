#pragma once

#include <cstdint>
#include <string_view>

namespace freshsense {

// FNV-1a, used to bind thresholds and serialized state to the exact
// configuration that produced them. Stable across platforms.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace freshsense
