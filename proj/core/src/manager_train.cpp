#include <cmath>
#include <limits>
#include <numeric>

#include "mtsp/manager.hpp"
#include "mtsp/ops.hpp"
#include "mtsp/optim.hpp"

namespace mtsp::manager {

using ad::Tensor;

void ManagerConfig::validate() const {
  arch.validate();
  if (n < 1) throw ContractError("manager config: n must be >= 1");
  if (beta < 0.0) throw ContractError("manager config: beta must be >= 0");
  if (iterations < 0) throw ContractError("manager config: iterations must be >= 0");
  if (batch_size < 1) throw ContractError("manager config: batch_size must be >= 1");
  if (val_size < 1 || val_interval < 1) throw ContractError("manager config: validation size and interval must be >= 1");
  if (!(lr > 0.0)) throw ContractError("manager config: lr must be > 0");
}

nlohmann::json to_json(const ManagerConfig& c) {
  return {{"arch", to_json(c.arch)},
          {"n", c.n},
          {"beta", c.beta},
          {"objective", to_string(c.objective)},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"val_size", c.val_size},
          {"val_interval", c.val_interval},
          {"lr", c.lr},
          {"seed", c.seed}};
}

ManagerConfig manager_config_from_json(const nlohmann::json& j, ManagerConfig base) {
  ManagerConfig c = std::move(base);
  if (j.contains("arch")) {
    nlohmann::json a = to_json(c.arch);
    a.update(j.at("arch"));
    c.arch = manager_arch_from_json(a);
  }
  c.n = j.value("n", c.n);
  c.beta = j.value("beta", c.beta);
  if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.val_size = j.value("val_size", c.val_size);
  c.val_interval = j.value("val_interval", c.val_interval);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<Instance> validation_set(const ManagerConfig& cfg) {
  std::seed_seq seq{cfg.seed, std::uint64_t{0x76616c}};
  std::mt19937_64 rng(seq);
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(cfg.val_size));
  for (int i = 0; i < cfg.val_size; ++i) out.push_back(generate_instance(cfg.n, cfg.arch.m, cfg.beta, rng()));
  return out;
}

double evaluate_manager(const ManagerModel& model, const worker::WorkerModel& worker, std::span<const Instance> insts,
                        Objective objective, AssignMode mode, std::uint64_t seed) {
  if (insts.empty()) return 0.0;
  std::vector<const Instance*> ptrs;
  for (const Instance& i : insts) ptrs.push_back(&i);
  std::mt19937_64 rng(seed);
  const auto a = assign(model, ptrs, mode, &rng);
  const auto reports = route_assignments(ptrs, a, worker);
  double total = 0.0;
  for (const auto& r : reports) total += r.cost(objective);
  return total / static_cast<double>(reports.size());
}

ManagerTrainResult train_manager(const ManagerConfig& cfg, const worker::WorkerModel& worker,
                                 const ManagerProgress& progress) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ManagerModel model(cfg.arch, rng());
  ad::Adam opt(model.params(), ad::AdamConfig{cfg.lr});
  const std::vector<Instance> val = validation_set(cfg);

  ManagerTrainResult result{model.clone(), {}, 0.0, 0.0, -1};
  result.initial_val_cost = evaluate_manager(model, worker, val, cfg.objective);
  result.best_val_cost = result.initial_val_cost;

  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const auto n = static_cast<std::size_t>(cfg.n);
  std::vector<Instance> batch(bs);
  std::vector<const Instance*> ptrs(bs), doubled(2 * bs);
  std::vector<double> cost(bs), base(bs);

  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < bs; ++i) {
      batch[i] = generate_instance(cfg.n, cfg.arch.m, cfg.beta, rng());
      ptrs[i] = doubled[i] = doubled[bs + i] = &batch[i];
    }
    const Tensor lp = model.log_probs(ptrs, true);
    const std::vector<int> sampled = choose(lp, AssignMode::Sample, &rng);
    const std::vector<int> greedy = choose(lp, AssignMode::Greedy, nullptr);

    std::vector<Assignment> both = to_assignments(lp, sampled, n);
    const std::vector<Assignment> g = to_assignments(lp, greedy, n);
    both.insert(both.end(), g.begin(), g.end());
    const auto reports = route_assignments(doubled, both, worker);

    ManagerCurvePoint pt;
    pt.iteration = it;
    pt.val_cost = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < bs; ++i) {
      const SolutionReport& r = reports[i];
      cost[i] = r.cost(cfg.objective);
      base[i] = reports[bs + i].cost(cfg.objective);
      pt.mean_cost += cost[i];
      pt.baseline_cost += base[i];
      if (cfg.objective == Objective::MinMax) {
        pt.mean_length += r.worst_plan().length;
        pt.mean_rej += r.worst_plan().rej_rate;
      } else {
        pt.mean_length += r.overall_length;
        pt.mean_rej += r.overall_rej;
      }
    }
    const double inv = 1.0 / static_cast<double>(bs);
    pt.mean_cost *= inv;
    pt.baseline_cost *= inv;
    pt.mean_length *= inv;
    pt.mean_rej *= inv;

    const Tensor loss = worker::policy_gradient_loss(assignment_logprob(lp, sampled, n), cost, base);
    if (!std::isfinite(loss.item())) {
      throw worker::TrainingDiverged("manager training diverged at iteration " + std::to_string(it) + ": loss " +
                                     std::to_string(loss.item()));
    }
    model.params().zero_grad();
    ad::backward(loss);
    opt.step();
    if (!model.params().all_finite()) {
      throw worker::TrainingDiverged("manager training diverged at iteration " + std::to_string(it) +
                                     ": non-finite parameters");
    }

    if ((it + 1) % cfg.val_interval == 0 || it + 1 == cfg.iterations) {
      pt.val_cost = evaluate_manager(model, worker, val, cfg.objective);
      if (pt.val_cost < result.best_val_cost) {
        result.best_val_cost = pt.val_cost;
        result.best_iteration = it;
        result.model.copy_from(model);
      }
    }
    result.curve.push_back(pt);
    if (progress) progress(pt);
  }
  return result;
}

}  // namespace mtsp::manager
