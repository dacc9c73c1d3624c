#pragma once

#include <cstdint>

namespace sparsejac::rng {

// Counter-based generator built on the SplitMix64 finalizer
// (Steele/Lea/Flood, "Fast splittable pseudorandom number generators").
// draw(seed, index) is a pure function of its arguments, so any stream
// position can be regenerated without state: identical (seed, index)
// gives identical output on every platform.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t draw(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0xD1B54A32D192ED03ULL));
}

// Uniform integer in [0, range) from a single 64-bit draw
// (Lemire's multiply-shift; bias < range / 2^64, far below any
// statistical resolution used here, and exactly one draw per sample).
inline std::uint64_t bounded(std::uint64_t word, std::uint64_t range) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(word) * range) >> 64);
}

// Derive an independent sub-seed for Monte Carlo sample `index`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + 0x6A09E667F3BCC909ULL * (index + 1));
}

} // namespace sparsejac::rng
