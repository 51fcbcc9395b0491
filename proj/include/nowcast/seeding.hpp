#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nowcast {

using Rng = std::mt19937_64;

/// Named sub-seed: every stage draws from its own stream derived from the
/// run's root seed, so adding draws in one stage never perturbs another.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::uint64_t z = root ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace nowcast
