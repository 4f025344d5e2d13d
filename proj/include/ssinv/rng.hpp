#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ssinv {

// splitmix64 finalizer (Vigna / Steele et al.). Used for seeding and for
// deriving substream seeds; not used as the main generator.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// Independent substream seed for (master_seed, stream_id). All parallel work
// (per-record generation, per-run labeling, per-epoch shuffles) pulls its
// seed through this, so results never depend on scheduling.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t h = mix64(master_seed + 0x9E3779B97F4A7C15ULL);
    return mix64(h ^ (stream_id + 0x2545F4914F6CDD1DULL));
}

// xoshiro256** (Blackman & Vigna), state expanded from the seed with
// splitmix64. Platform-independent: 64-bit integer ops only.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            word = mix64(sm);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0, 1], 53-bit resolution. The open lower end keeps
    // -log(u) finite, so exponential(rate) below is exactly -ln(u)/rate.
    double uniform01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Unbiased integer in {0..n-1} (Lemire's multiply-with-rejection).
    std::uint64_t uniform_int(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    int uniform_int_inclusive(int lo, int hi) {
        return lo + static_cast<int>(uniform_int(static_cast<std::uint64_t>(hi - lo) + 1));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace ssinv
