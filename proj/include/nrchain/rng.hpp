#pragma once

#include <cstdint>

namespace nrchain {

/// SplitMix64: counter-based 64-bit generator (Weyl increment + avalanche
/// finalizer). Streams derived from (master seed, index) are independent and
/// replay bit-exactly, which is what the trajectory ensembles need.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in the open interval (0, 1).
    double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

/// Per-stream seed for trajectory `index` under a master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace nrchain
