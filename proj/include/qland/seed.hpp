#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string_view>

namespace qland {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Stable seed for a (master seed, role, indices) coordinate.
///
/// The result depends only on the arguments, never on execution order, so
/// work items can be evaluated by any number of workers and still reproduce
/// the same random streams.
constexpr std::uint64_t
derive_seed(std::uint64_t master, std::string_view role,
            std::initializer_list<std::uint64_t> indices = {}) noexcept {
    std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a(role));
    for (const auto idx : indices) {
        h = detail::splitmix64(h ^ detail::splitmix64(idx + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng &rng) {
    return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

} // namespace qland
