#pragma once

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <limits>

namespace streamnet {

/// Number of representable doubles strictly between a and b (0 when equal).
/// Uses the ordered-integer mapping of IEEE-754 bit patterns; +0 and -0 are
/// treated as the same value. Returns UINT64_MAX if either input is NaN.
inline std::uint64_t ulps_between(double a, double b) noexcept {
    if (a != a || b != b) return std::numeric_limits<std::uint64_t>::max();
    auto ordered = [](double x) -> std::int64_t {
        const auto u = std::bit_cast<std::uint64_t>(x);
        return (u & 0x8000000000000000ull)
                   ? -static_cast<std::int64_t>(u & 0x7fffffffffffffffull)
                   : static_cast<std::int64_t>(u);
    };
    const std::int64_t d = ordered(a) - ordered(b);
    return static_cast<std::uint64_t>(d < 0 ? -d : d);
}

/// FNV-1a 64-bit over a byte range.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace streamnet
