#include <cmath>
#include <numeric>

#include "mtsp/optim.hpp"
#include "mtsp/worker.hpp"

namespace mtsp::worker {

using ad::Tensor;

void WorkerConfig::validate() const {
  arch.validate();
  if (batch_size < 1) throw ContractError("worker config: batch_size must be >= 1");
  if (epochs < 0 || instances_per_epoch < 0) throw ContractError("worker config: negative budget");
  if (!(alpha > 0.0)) throw ContractError("worker config: alpha must be > 0");
  if (!(lr > 0.0)) throw ContractError("worker config: lr must be > 0");
  if (beta < 0.0) throw ContractError("worker config: beta must be >= 0");
}

nlohmann::json to_json(const WorkerConfig& c) {
  return {{"arch", to_json(c.arch)}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"instances_per_epoch", c.instances_per_epoch}, {"alpha", c.alpha}, {"lr", c.lr},
          {"beta", c.beta}, {"seed", c.seed}};
}

WorkerConfig worker_config_from_json(const nlohmann::json& j, WorkerConfig base) {
  WorkerConfig c = std::move(base);
  if (j.contains("arch")) {
    nlohmann::json a = to_json(c.arch);
    a.update(j.at("arch"));
    c.arch = worker_arch_from_json(a);
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.instances_per_epoch = j.value("instances_per_epoch", c.instances_per_epoch);
  c.alpha = j.value("alpha", c.alpha);
  c.lr = j.value("lr", c.lr);
  c.beta = j.value("beta", c.beta);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

Tensor policy_gradient_loss(const Tensor& logprob, std::span<const double> cost, std::span<const double> baseline) {
  const std::size_t b = logprob.rows();
  if (logprob.cols() != 1 || cost.size() != b || baseline.size() != b) {
    throw ContractError("policy_gradient_loss: expected logprob (" + std::to_string(cost.size()) +
                        ", 1), got " + logprob.shape_str());
  }
  std::vector<double> adv(b);
  for (std::size_t i = 0; i < b; ++i) adv[i] = cost[i] - baseline[i];
  return ad::mean(ad::mul(logprob, Tensor::from(b, 1, std::move(adv))));
}

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

WorkerTrainResult train_worker(const WorkerConfig& cfg, const WorkerProgress& progress) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  WorkerModel policy(cfg.arch, rng());
  WorkerModel baseline = policy.clone();
  ad::Adam opt(policy.params(), ad::AdamConfig{cfg.lr});

  WorkerTrainResult result{policy.clone(), {}, 0};
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<Instance> batch(bs);
  std::vector<const Instance*> ptrs(bs);
  std::vector<double> cost(bs), length(bs), rej(bs), bl_cost(bs);

  for (int it = 0; it < cfg.updates(); ++it) {
    for (std::size_t i = 0; i < bs; ++i) {
      batch[i] = generate_instance(cfg.arch.pretrain_size, 1, cfg.beta, rng());
      ptrs[i] = &batch[i];
    }

    const Encoding enc = policy.encode(ptrs, true);
    const Decoding dec = policy.decode(enc, DecodeMode::Sample, &rng);
    for (std::size_t i = 0; i < bs; ++i) {
      const SubTourPlan plan = backtrack(dec.tours[i], batch[i]);
      cost[i] = plan.hybrid_cost;
      length[i] = plan.length;
      rej[i] = plan.rej_rate;
    }
    {
      ad::NoGradGuard no_grad;
      const Decoding greedy = baseline.decode(baseline.encode(ptrs, false), DecodeMode::Greedy, nullptr);
      for (std::size_t i = 0; i < bs; ++i) bl_cost[i] = backtrack(greedy.tours[i], batch[i]).hybrid_cost;
    }

    const Tensor loss = policy_gradient_loss(dec.logprob, cost, bl_cost);
    if (!std::isfinite(loss.item())) {
      throw TrainingDiverged("worker training diverged at iteration " + std::to_string(it) + ": loss " +
                             std::to_string(loss.item()));
    }
    policy.params().zero_grad();
    ad::backward(loss);
    opt.step();
    if (!policy.params().all_finite()) {
      throw TrainingDiverged("worker training diverged at iteration " + std::to_string(it) +
                             ": non-finite parameters");
    }

    WorkerCurvePoint pt;
    pt.iteration = it;
    pt.mean_cost = mean_of(cost);
    pt.mean_length = mean_of(length);
    pt.mean_rej = mean_of(rej);
    pt.baseline_cost = mean_of(bl_cost);
    if (pt.mean_cost - pt.baseline_cost < -cfg.alpha) {
      baseline.copy_from(policy);
      pt.baseline_updated = true;
      ++result.baseline_updates;
    }
    result.curve.push_back(pt);
    if (progress) progress(pt);
  }
  result.model.copy_from(baseline);
  return result;
}

}  // namespace mtsp::worker
