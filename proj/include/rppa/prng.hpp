#pragma once

#include <array>
#include <cstdint>

// Deterministic random streams for reproducible simulation runs.
//
// Generator: xoshiro256++ (Blackman & Vigna, 2018), seeded through the
// splitmix64 mixer (Vigna, 2015). Both algorithms are fixed public-domain
// bit-for-bit specifications, so a given seed produces the same sequence on
// every platform. Substreams are derived from a master seed and a stream id
// by mixing the id into the seed before state expansion; streams with
// different ids are statistically independent.

namespace rppa {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    // Independent substream of a master seed. Used to keep e.g. item-type
    // draws and valuation draws on separate streams within one run.
    static RandomStream substream(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t s = master_seed;
        std::uint64_t tag = splitmix64(s) ^ (stream_id * 0xD1B54A32D192ED03ULL);
        return RandomStream(tag);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Multiply-shift mapping; the bias is below
    // n / 2^64 and irrelevant at simulation scale.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

// Stream ids used by the simulators so that changing one aspect of a run
// (e.g. the number of item types) does not perturb unrelated draws.
namespace stream_id {
inline constexpr std::uint64_t item_types = 0;
inline constexpr std::uint64_t valuations = 1;
inline constexpr std::uint64_t policy = 2;
}  // namespace stream_id

}  // namespace rppa
