#pragma once

// Counter-based seed derivation. Every random stream in a run is keyed by
// (global seed, purpose tag, indices...), so resuming from a checkpoint
// reproduces the exact same streams without serializing engine state.

#include <cstdint>
#include <random>
#include <string_view>

namespace ager {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Mix an arbitrary list of 64-bit keys into one seed.
inline uint64_t mix_seed(uint64_t a) { return splitmix64(a); }
template <class... Rest>
uint64_t mix_seed(uint64_t a, Rest... rest) {
    return splitmix64(a ^ mix_seed(static_cast<uint64_t>(rest)...));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

template <class... Keys>
std::mt19937_64 derive_rng(uint64_t seed, std::string_view purpose, Keys... keys) {
    return make_rng(mix_seed(seed, fnv1a64(purpose), static_cast<uint64_t>(keys)...));
}

// Gumbel(0,1) sample: -log(-log(U)), U in (0,1).
template <class T>
T sample_gumbel(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(1e-12, 1.0);
    return static_cast<T>(-std::log(-std::log(uni(rng))));
}

}  // namespace ager
