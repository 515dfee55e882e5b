#include "mtsp/optim.hpp"

#include <cmath>

namespace mtsp::ad {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ContractError("adam_step: gradient/parameter size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(ParamSet& params, AdamConfig cfg) : params_(&params), cfg_(cfg), states_(params.size()) {}

void Adam::step() {
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_->size(); ++i) {
    auto& entry = params_->entry(i);
    if (!entry.trainable) continue;
    Tensor& t = entry.tensor;
    std::span<const double> g = t.grad();
    if (g.size() != t.size()) {
      zeros.assign(t.size(), 0.0);
      g = zeros;
    }
    adam_step(t.mutable_data(), g, states_[i], cfg_);
  }
}

}  // namespace mtsp::ad
