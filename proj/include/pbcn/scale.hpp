#pragma once

namespace pbcn {

enum class Scale { kSmall, kLarge };

inline constexpr double kDefaultRamBudgetGb = 12.0;

// Small iff the full 2^(n+m) table of 8-byte action-values fits in the budget.
Scale classify_scale(int nodes, int inputs, double ram_budget_gb = kDefaultRamBudgetGb);

inline const char* to_string(Scale s) { return s == Scale::kSmall ? "small" : "large"; }

}  // namespace pbcn
