#pragma once

#include <cstdint>
#include <random>

namespace eltmcm {

/// Independent generator streams derived from one experiment seed.
enum class SeedLane : std::uint32_t { channel = 0, noise = 1, symbols = 2, monte_carlo = 3 };

/// Seeds a 64-bit Mersenne Twister from (seed, lane, index) through seed_seq.
inline std::mt19937_64 make_rng(std::uint64_t seed, SeedLane lane, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(lane), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace eltmcm
