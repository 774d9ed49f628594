#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pbcn {

// One byte per Boolean component, each 0 or 1.
using Bits = std::vector<std::uint8_t>;
using State = Bits;
using Action = Bits;

using Rng = std::mt19937_64;

// Most-significant-bit first: bits[0] carries weight 2^(n-1).
std::uint64_t to_decimal(std::span<const std::uint8_t> bits);

// Inverse of to_decimal. Throws std::out_of_range when d >= 2^length.
Bits from_decimal(std::uint64_t d, int length);

inline std::uint64_t space_size(int bits) { return std::uint64_t{1} << bits; }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t count) {
  return std::uniform_int_distribution<std::uint64_t>(0, count - 1)(rng);
}

// Independent child stream for (seed, stream, index).
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace pbcn
