#pragma once

#include <cstdint>
#include <random>

namespace gridtid {

// Deterministic per-scenario RNG streams. Every stream is derived from
// the master seed plus integer tags (topology index, sample index, ...)
// through splitmix64 mixing, so generation order never matters and
// parallel producers would see the same sequences.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_tags(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Tags>
std::uint64_t mix_tags(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
    return mix_tags(splitmix64(seed ^ splitmix64(tag)), rest...);
}

template <typename... Tags>
std::mt19937_64 sub_stream(std::uint64_t master_seed, Tags... tags) {
    return std::mt19937_64(mix_tags(master_seed, static_cast<std::uint64_t>(tags)...));
}

} // namespace gridtid
