#include "pbcn/bits.hpp"

#include <stdexcept>
#include <string>

namespace pbcn {

std::uint64_t to_decimal(std::span<const std::uint8_t> bits) {
  std::uint64_t d = 0;
  for (std::uint8_t b : bits) d = (d << 1) | (b ? 1u : 0u);
  return d;
}

Bits from_decimal(std::uint64_t d, int length) {
  if (length < 0 || length > 63 || d >= space_size(length)) {
    throw std::out_of_range("decimal " + std::to_string(d) +
                            " outside [0, 2^" + std::to_string(length) + ")");
  }
  Bits bits(static_cast<std::size_t>(length));
  for (int j = length - 1; j >= 0; --j) {
    bits[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(d & 1u);
    d >>= 1;
  }
  return bits;
}

}  // namespace pbcn
