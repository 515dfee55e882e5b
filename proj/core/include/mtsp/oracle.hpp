#pragma once

#include <span>
#include <stdexcept>

#include "mtsp/domain.hpp"

namespace mtsp::oracle {

/// Raised when an instance exceeds the enumeration limits.
class LimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLimits {
  int max_n = 8;
  int max_per_vehicle = 6;
};

/// Minimum-J plan over every ordered subset of `assigned` (the complement is
/// rejected). Ties prefer more served customers, then the lexicographically
/// smallest served sequence.
SubTourPlan best_subtour_exact(std::span<const int> assigned, const Instance& inst, int vehicle = 0,
                               const OracleLimits& limits = {});

/// Enumerates all m^n assignments in lexicographic order (customer 0 is the
/// most significant digit) and keeps the first strict minimum of max_b J_b.
/// Each vehicle's sub-tour is the best_subtour_exact plan of its subset; the
/// per-subset optima are tabulated once over all 2^n subsets.
SolutionReport solve_exact(const Instance& inst, const OracleLimits& limits = {});

}  // namespace mtsp::oracle
