#pragma once

#include <cstdint>
#include <random>

namespace shortpanel {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index); used to give every Monte Carlo
// replication, tested k, or worker its own reproducible generator.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedU};
  return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng = make_stream(seed, stream);
  return rng();
}

}  // namespace shortpanel
