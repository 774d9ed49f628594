#include "pbcn/scale.hpp"

#include <cmath>

namespace pbcn {

Scale classify_scale(int nodes, int inputs, double ram_budget_gb) {
  const double table_bytes = std::ldexp(8.0, nodes + inputs);
  const double budget_bytes = std::ldexp(ram_budget_gb, 30);
  return table_bytes <= budget_bytes ? Scale::kSmall : Scale::kLarge;
}

}  // namespace pbcn
