#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace panda {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive decorrelated child seeds from a master
// seed plus a stream path, so that worker order never affects sampled values.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = splitmix64(s ^ (p + 0x9E3779B97F4A7C15ull));
    return s;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace panda
