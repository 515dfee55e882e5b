#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtsp/tensor.hpp"

namespace mtsp::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

/// Compares the analytic gradient of scalar-valued `f` at `x` with central
/// differences of step `h`. Relative error is |a-b| / max(1e-8, |a|+|b|).
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5,
                           double tol = 1e-4);

struct GradCheckCase {
  std::string name;
  double tolerance = 1e-4;
  GradCheckReport report;
};

/// Randomised finite-difference checks over every differentiable op used by
/// the GIN, the encoder and the decoder. Shapes are drawn from `seed`.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed, int rounds = 3);

}  // namespace mtsp::ad
