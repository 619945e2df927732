#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ramanhom {

// splitmix64 step; used to derive independent substream seeds from a master
// seed so that parallel consumers are order-independent and bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic generator for substream (master_seed, stream_id). Used per
// trajectory, per cycle, etc.; identical inputs give identical streams
// regardless of evaluation order or thread count.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t s = master_seed ^ (0x6a09e667f3bcc909ULL + stream_id * 0x9e3779b97f4a7c15ULL);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Named substream, for wiring all of a scenario's randomness to one seed.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::string_view name) {
    return substream(master_seed, fnv1a64(name));
}

}  // namespace ramanhom
