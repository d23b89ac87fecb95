#pragma once

#include <cstdint>

#include "copreg/special_functions.hpp"

namespace copreg {

/// splitmix64 step; used both as a generator seeder and as a key mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent substream key from (seed, index).  Replications,
/// randomization shifts, and clusters each get their own key so results do
/// not depend on evaluation order.
inline std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

/// xoshiro256++ with splitmix64 seeding.  Bit-reproducible across platforms;
/// normals come from the inverse cdf so streams stay aligned under
/// common-random-number reuse.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        return Rng(substream_key(seed, index));
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

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the inverse cdf.
    double normal() { return norm_quantile(uniform()); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

} // namespace copreg
