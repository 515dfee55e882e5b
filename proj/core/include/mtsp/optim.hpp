#pragma once

#include <span>
#include <vector>

#include "mtsp/params.hpp"

namespace mtsp::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg);

/// Adam over every trainable tensor of a ParamSet. A tensor whose gradient
/// was never populated is treated as having a zero gradient.
class Adam {
 public:
  Adam(ParamSet& params, AdamConfig cfg);

  void step();
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  ParamSet* params_;
  AdamConfig cfg_;
  std::vector<AdamState> states_;
};

}  // namespace mtsp::ad
