#pragma once

#include <cstdint>
#include <random>

namespace impactlab {

// Random streams are keyed by (seed, path index, stream id) so that every path
// can be regenerated independently of worker count and evaluation order.
enum class Stream : std::uint32_t { martingale = 0, drift = 1, strategy = 2 };

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t path_index, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path_index),
                    static_cast<std::uint32_t>(path_index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace impactlab
