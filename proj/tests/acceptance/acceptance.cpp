// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
// Set MTSP_ACCEPTANCE_CACHE to a directory to reuse trained checkpoints
// between runs; timings of cached stages are then reported as cached.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mtsp/grad_check.hpp"
#include "mtsp/kmeans.hpp"
#include "mtsp/manager.hpp"
#include "mtsp/metaheuristics.hpp"
#include "mtsp/oracle.hpp"
#include "mtsp/worker.hpp"
#include "reference.hpp"

using namespace mtsp;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kOracleInstances = 50;
constexpr double kDominanceTol = 1e-9;
constexpr int kMetaIterations = 200;
constexpr double kOracleBudgetS = 120.0;

// Criterion 2
constexpr int kBacktrackPairs = 100000;
constexpr double kLengthTol = 1e-9;

// Criterion 3
constexpr double kGradTol = 1e-4;
constexpr double kGradTolBatchnormTrain = 1e-3;
constexpr double kGradBudgetS = 60.0;

// Criterion 4
constexpr double kNormTol = 1e-12;
constexpr double kInvarianceTol = 1e-9;

// Criterion 5
constexpr int kWorkerUpdates = 2000;
constexpr int kWorkerBatch = 128;
constexpr int kHeldOut = 100;
constexpr double kWorkerRatio = 0.85;
constexpr double kWorkerMaxRej = 0.01;
constexpr double kWorkerBudgetS = 30 * 60.0;

// Criteria 6, 8, 9
constexpr int kManagerN = 20;
constexpr int kManagerM = 4;
constexpr int kManagerIterations = 1500;
constexpr int kManagerBatch = 128;
constexpr double kManagerLr = 1e-4;
constexpr int kValSize = 100;
constexpr int kValInterval = 100;
constexpr int kTestInstances = 100;
constexpr double kManagerImprovement = 0.10;
constexpr double kManagerBudgetS = 60 * 60.0;

// Criterion 10
constexpr int kSpeedN = 50;
constexpr int kSpeedM = 10;
constexpr int kSpeedRuns = 5;
constexpr double kSpeedBudgetS = 1.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Line& line) {
  if (!line.pass) ++failures;
  std::cout << (line.pass ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": " << line.detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::optional<fs::path> cache_dir() {
  const char* env = std::getenv("MTSP_ACCEPTANCE_CACHE");
  if (env == nullptr || *env == '\0') return std::nullopt;
  fs::create_directories(env);
  return fs::path(env);
}

std::vector<Instance> test_set(int count, int n, int m, double beta, std::uint64_t seed0) {
  std::vector<Instance> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_instance(n, m, beta, seed0 + static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<const Instance*> ptrs(const std::vector<Instance>& v) {
  std::vector<const Instance*> out;
  for (const auto& i : v) out.push_back(&i);
  return out;
}

Instance permuted(const Instance& inst, const std::vector<int>& order) {
  Instance out = inst;
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.customers[k] = inst.customers[static_cast<std::size_t>(order[k])];
    out.customers[k].id = static_cast<int>(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trained artefacts

struct TrainedWorker {
  worker::WorkerModel model;
  double seconds = 0.0;
  bool cached = false;
};

TrainedWorker obtain_worker(double beta, const std::string& tag) {
  worker::WorkerConfig cfg;
  cfg.batch_size = kWorkerBatch;
  cfg.instances_per_epoch = kWorkerBatch * kWorkerUpdates;
  cfg.beta = beta;
  cfg.seed = 1;
  const auto dir = cache_dir();
  const fs::path file = dir ? *dir / ("worker_" + tag + ".json") : fs::path();
  if (dir && fs::exists(file)) return {worker::WorkerModel::load(file), 0.0, true};
  std::cout << "training worker (" << tag << ", " << cfg.updates() << " updates)" << std::endl;
  const auto t0 = Clock::now();
  worker::WorkerTrainResult r = worker::train_worker(cfg);
  const double s = seconds_since(t0);
  if (dir) r.model.save(file);
  return {std::move(r.model), s, false};
}

manager::ManagerConfig manager_config(double beta, Objective objective) {
  manager::ManagerConfig cfg;
  cfg.arch.m = kManagerM;
  cfg.n = kManagerN;
  cfg.beta = beta;
  cfg.objective = objective;
  cfg.iterations = kManagerIterations;
  cfg.batch_size = kManagerBatch;
  cfg.lr = kManagerLr;
  cfg.val_size = kValSize;
  cfg.val_interval = kValInterval;
  cfg.seed = 1;
  return cfg;
}

struct TrainedManager {
  manager::ManagerModel model;
  double seconds = 0.0;
  bool cached = false;
};

TrainedManager obtain_manager(const manager::ManagerConfig& cfg, const worker::WorkerModel& wk, const std::string& tag) {
  const auto dir = cache_dir();
  const fs::path file = dir ? *dir / ("manager_" + tag + ".json") : fs::path();
  if (dir && fs::exists(file)) return {manager::ManagerModel::load(file), 0.0, true};
  std::cout << "training manager (" << tag << ", " << cfg.iterations << " iterations)" << std::endl;
  const auto t0 = Clock::now();
  manager::ManagerTrainResult r = manager::train_manager(cfg, wk);
  const double s = seconds_since(t0);
  if (dir) r.model.save(file);
  return {std::move(r.model), s, false};
}

std::string timing(double s, bool cached) { return cached ? "cached" : fmt(s, 4) + " s"; }

// ---------------------------------------------------------------------------
// Criteria

Line oracle_dominance(const worker::WorkerModel& wk) {
  const auto t0 = Clock::now();
  baselines::MetaConfig meta;
  meta.iterations = kMetaIterations;
  manager::ManagerArch arch;
  arch.m = 2;
  const manager::ManagerModel mgr(arch, 3);

  int violations = 0, enumeration_mismatch = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const Instance inst = generate_instance(6, 2, 100.0, 1000 + static_cast<std::uint64_t>(i));
    const double best = oracle::solve_exact(inst).minmax_cost;
    const auto seed = static_cast<std::uint64_t>(i);
    const std::vector<double> costs{
        baselines::sa_solve(inst, meta, seed).report.minmax_cost,
        baselines::ts_solve(inst, meta, seed).report.minmax_cost,
        baselines::ba_solve(inst, meta, seed).report.minmax_cost,
        baselines::kmeans_solve(inst, wk).minmax_cost,
        baselines::random_solve(inst, wk, seed).minmax_cost,
        manager::solve(inst, mgr, wk).minmax_cost,
    };
    for (double c : costs) {
      if (c < best - kDominanceTol) ++violations;
      worst_gap = std::min(worst_gap, c - best);
    }

    const DistanceMatrix dist(inst);
    baselines::GiantTour gt{{0, 1, 2, 3, 4, 5}, {0}};
    double enumerated = std::numeric_limits<double>::infinity();
    do {
      for (int cut = 0; cut <= 6; ++cut) {
        gt.splits[0] = cut;
        enumerated = std::min(enumerated, baselines::giant_cost(gt, inst, dist, Objective::MinMax));
      }
    } while (std::next_permutation(gt.perm.begin(), gt.perm.end()));
    if (enumerated != best) ++enumeration_mismatch;
  }
  const double s = seconds_since(t0);
  return {violations == 0 && enumeration_mismatch == 0 && s < kOracleBudgetS,
          std::to_string(violations) + " solver results below oracle (min gap " + fmt(worst_gap) + "), " +
              std::to_string(enumeration_mismatch) + " enumeration mismatches, " + fmt(s, 4) + " s"};
}

Line backtracking_feasibility() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(1, 20);
  const double betas[] = {0.0, 10.0, 100.0};
  long late = 0, length_mismatch = 0, partition_mismatch = 0;
  double worst_length = 0.0;
  for (int k = 0; k < kBacktrackPairs; ++k) {
    const int n = size(rng);
    const Instance inst = generate_instance(n, 1, betas[k % 3], rng());
    std::vector<int> tour(static_cast<std::size_t>(n));
    std::iota(tour.begin(), tour.end(), 0);
    std::shuffle(tour.begin(), tour.end(), rng);
    const SubTourPlan plan = backtrack(tour, inst);
    for (std::size_t j = 0; j < plan.served.size(); ++j) {
      if (plan.service_times[j] > inst.customers[static_cast<std::size_t>(plan.served[j])].t) ++late;
    }
    const double d = std::abs(ref::route_length(inst, plan.served) - plan.length);
    worst_length = std::max(worst_length, d);
    if (d > kLengthTol) ++length_mismatch;
    const ref::Sim sim = ref::simulate(inst, tour);
    if (sim.served != plan.served || sim.rejected != plan.rejected) ++partition_mismatch;
  }
  return {late == 0 && length_mismatch == 0 && partition_mismatch == 0,
          std::to_string(kBacktrackPairs) + " pairs, " + std::to_string(late) + " late services, " +
              std::to_string(length_mismatch) + " length mismatches (max " + fmt(worst_length, 3) + "), " +
              std::to_string(partition_mismatch) + " served/rejected mismatches"};
}

Line gradient_correctness() {
  const auto t0 = Clock::now();
  const auto cases = ad::run_gradcheck_suite(2024, 3);
  const double s = seconds_since(t0);
  int failed = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    const double tol = c.name.find("batchnorm(train)") != std::string::npos ? kGradTolBatchnormTrain : kGradTol;
    if (!(c.report.max_rel_error < tol)) ++failed;
    if (c.report.max_rel_error / tol > worst) {
      worst = c.report.max_rel_error / tol;
      worst_name = c.name;
    }
  }
  return {failed == 0 && !cases.empty() && s < kGradBudgetS,
          std::to_string(cases.size()) + " cases, " + std::to_string(failed) + " failed, worst error/tolerance " +
              fmt(worst, 3) + " (" + worst_name + "), " + fmt(s, 4) + " s"};
}

Line normalization_invariants() {
  ad::NoGradGuard guard;
  double worst_assign = 0.0, worst_step = 0.0, worst_perm = 0.0;
  long masked_mass = 0;

  manager::ManagerArch arch;
  arch.m = kManagerM;
  const manager::ManagerModel mgr(arch, 5);
  const auto insts = test_set(32, kManagerN, kManagerM, 100.0, 3000);
  const auto p = ptrs(insts);
  for (bool training : {true, false}) {
    const ad::Tensor lp = mgr.log_probs(p, training);
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t b = 0; b < lp.cols(); ++b) sum += std::exp(lp(r, b));
      worst_assign = std::max(worst_assign, std::abs(sum - 1.0));
    }
  }

  const worker::WorkerModel wk(worker::WorkerArch{}, 6);
  std::mt19937_64 rng(6);
  for (int n : {1, 5, 12, 20}) {
    const auto subs = test_set(16, n, 1, 100.0, 4000 + static_cast<std::uint64_t>(n));
    const auto sp = ptrs(subs);
    for (auto mode : {worker::DecodeMode::Greedy, worker::DecodeMode::Sample}) {
      const worker::Decoding dec = wk.decode(wk.encode(sp, false), mode, &rng, true);
      for (std::size_t i = 0; i < subs.size(); ++i) {
        std::vector<bool> visited(static_cast<std::size_t>(n) + 1, false);
        visited[0] = true;
        for (std::size_t t = 0; t < dec.step_logprobs.size(); ++t) {
          double mass = 0.0;
          for (std::size_t j = 0; j <= static_cast<std::size_t>(n); ++j) {
            const double pj = std::exp(dec.step_logprobs[t](i, j));
            if (visited[j]) {
              if (pj != 0.0) ++masked_mass;
            } else {
              mass += pj;
            }
          }
          worst_step = std::max(worst_step, std::abs(mass - 1.0));
          visited[static_cast<std::size_t>(dec.tours[i][t]) + 1] = true;
        }
      }
    }
  }

  for (int round = 0; round < 5; ++round) mgr.log_probs(p, true);
  std::mt19937_64 prng(8);
  for (const Instance& inst : insts) {
    std::vector<int> order(inst.n());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), prng);
    const Instance perm = permuted(inst, order);
    const Instance* a[] = {&inst};
    const Instance* b[] = {&perm};
    const auto ga = mgr.embed_graph(a, false);
    const auto gb = mgr.embed_graph(b, false);
    for (std::size_t c = 0; c < ga.graph.cols(); ++c) {
      worst_perm = std::max(worst_perm, std::abs(ga.graph(0, c) - gb.graph(0, c)));
    }
  }

  return {worst_assign <= kNormTol && worst_step <= kNormTol && masked_mass == 0 && worst_perm <= kInvarianceTol,
          "assignment sum error " + fmt(worst_assign, 3) + ", decoder step sum error " + fmt(worst_step, 3) + ", " +
              std::to_string(masked_mass) + " masked entries with mass, graph embedding permutation error " +
              fmt(worst_perm, 3)};
}

Line worker_learning(const TrainedWorker& tw) {
  const auto held = test_set(kHeldOut, 5, 1, 100.0, 900000);
  const auto rolls = worker::rollout_many(tw.model, held, worker::DecodeMode::Greedy);
  double policy = 0.0, rej = 0.0, random_tour = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    policy += evaluate_plan(rolls[i].plan, held[i].beta);
    rej += rolls[i].plan.rej_rate;
    std::vector<int> perm{0, 1, 2, 3, 4};
    double sum = 0.0;
    int count = 0;
    do {
      sum += ref::simulate(held[i], perm).cost;
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    random_tour += sum / count;
  }
  const double k = static_cast<double>(held.size());
  policy /= k;
  rej /= k;
  random_tour /= k;
  const bool in_time = tw.cached || tw.seconds < kWorkerBudgetS;
  return {policy <= kWorkerRatio * random_tour && rej <= kWorkerMaxRej && in_time,
          "greedy J " + fmt(policy) + " vs random-tour J " + fmt(random_tour) + " (ratio " +
              fmt(policy / random_tour, 3) + "), rejection " + fmt(100.0 * rej, 3) + "%, training " +
              timing(tw.seconds, tw.cached)};
}

struct Means {
  double cost = 0.0;
  double length = 0.0;
  double rej = 0.0;
  double spread = 0.0;
};

Means summarise(const std::vector<SolutionReport>& reports, Objective objective) {
  Means m;
  for (const auto& r : reports) {
    m.cost += r.cost(objective);
    m.length += r.overall_length;
    m.rej += r.overall_rej;
    const auto counts = r.assigned_counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    m.spread += static_cast<double>(*hi - *lo);
  }
  const auto k = static_cast<double>(reports.size());
  m.cost /= k;
  m.length /= k;
  m.rej /= k;
  m.spread /= k;
  return m;
}

std::vector<SolutionReport> solve_all(const std::vector<Instance>& insts, const manager::ManagerModel& mgr,
                                      const worker::WorkerModel& wk) {
  const auto p = ptrs(insts);
  const auto a = manager::assign(mgr, p, manager::AssignMode::Greedy);
  return manager::route_assignments(p, a, wk);
}

Line manager_learning(const TrainedManager& tm, const worker::WorkerModel& wk) {
  const manager::ManagerConfig cfg = manager_config(100.0, Objective::MinMax);
  const auto val = manager::validation_set(cfg);
  std::mt19937_64 rng(cfg.seed);
  const manager::ManagerModel init(cfg.arch, rng());
  const double init_sampled =
      manager::evaluate_manager(init, wk, val, Objective::MinMax, manager::AssignMode::Sample, cfg.seed);
  const double trained = manager::evaluate_manager(tm.model, wk, val, Objective::MinMax);

  const auto test = test_set(kTestInstances, kManagerN, kManagerM, 100.0, 500000);
  const double ours = summarise(solve_all(test, tm.model, wk), Objective::MinMax).cost;
  double km = 0.0, rnd = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    km += baselines::kmeans_solve(test[i], wk).minmax_cost;
    rnd += baselines::random_solve(test[i], wk, i).minmax_cost;
  }
  km /= static_cast<double>(test.size());
  rnd /= static_cast<double>(test.size());

  const bool improved = trained <= (1.0 - kManagerImprovement) * init_sampled;
  const bool in_time = tm.cached || tm.seconds < kManagerBudgetS;
  return {improved && ours < km && ours < rnd && in_time,
          "validation " + fmt(trained) + " vs random-init sampled " + fmt(init_sampled) + " (" +
              fmt(100.0 * (1.0 - trained / init_sampled), 3) + "% lower); test manager " + fmt(ours) + ", kmeans " +
              fmt(km) + ", random " + fmt(rnd) + "; training " + timing(tm.seconds, tm.cached)};
}

Line head_ablation() {
  const auto insts = test_set(8, kManagerN, kManagerM, 100.0, 6000);
  const auto p = ptrs(insts);
  ad::NoGradGuard guard;

  manager::ManagerArch single;
  single.m = kManagerM;
  single.heads = manager::VehicleHeads::Single;
  const manager::ManagerModel ms(single, 9);
  const auto hs = ms.embed_vehicles(ms.embed_graph(p, false));
  int unequal = 0;
  for (std::size_t b = 1; b < hs.size(); ++b) {
    const auto x = hs[0].data(), y = hs[b].data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) ++unequal;
  }

  manager::ManagerArch multi = single;
  multi.heads = manager::VehicleHeads::Multi;
  const manager::ManagerModel mm(multi, 9);
  const auto hm = mm.embed_vehicles(mm.embed_graph(p, false));
  int identical = 0;
  double min_diff = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < hm.size(); ++a) {
    for (std::size_t b = a + 1; b < hm.size(); ++b) {
      double diff = 0.0;
      for (std::size_t k = 0; k < hm[a].size(); ++k) diff = std::max(diff, std::abs(hm[a].data()[k] - hm[b].data()[k]));
      if (diff == 0.0) ++identical;
      min_diff = std::min(min_diff, diff);
    }
  }
  return {unequal == 0 && identical == 0,
          "single head: " + std::to_string(unequal) + " of " + std::to_string(hs.size() - 1) +
              " vehicle embeddings differ from vehicle 0; multi head: " + std::to_string(identical) +
              " identical pairs, smallest max difference " + fmt(min_diff, 3)};
}

Line beta_sensitivity(const manager::ManagerModel& mgr100, const worker::WorkerModel& wk100,
                      const manager::ManagerModel& mgr10, const worker::WorkerModel& wk10) {
  const auto test100 = test_set(kTestInstances, kManagerN, kManagerM, 100.0, 700000);
  auto test10 = test100;
  for (auto& inst : test10) inst.beta = 10.0;
  const Means a = summarise(solve_all(test100, mgr100, wk100), Objective::MinMax);
  const Means b = summarise(solve_all(test10, mgr10, wk10), Objective::MinMax);
  return {b.length <= a.length && b.rej >= a.rej,
          "beta=10 mean length " + fmt(b.length) + ", rejection " + fmt(100.0 * b.rej, 3) + "%; beta=100 mean length " +
              fmt(a.length) + ", rejection " + fmt(100.0 * a.rej, 3) + "%"};
}

Line objective_mode(const manager::ManagerModel& minmax, const manager::ManagerModel& overall,
                    const worker::WorkerModel& wk) {
  const auto test = test_set(kTestInstances, kManagerN, kManagerM, 100.0, 800000);
  const Means a = summarise(solve_all(test, minmax, wk), Objective::MinMax);
  const Means b = summarise(solve_all(test, overall, wk), Objective::Overall);
  return {b.spread >= a.spread,
          "mean max-min assigned customers: overall " + fmt(b.spread) + ", min-max " + fmt(a.spread)};
}

Line inference_speed(const worker::WorkerModel& wk) {
  manager::ManagerArch arch;
  arch.m = kSpeedM;
  const manager::ManagerModel mgr(arch, 10);
  worker::WorkerLibrary lib;
  lib.add(wk.clone());
  const Instance inst = generate_instance(kSpeedN, kSpeedM, 100.0, 42);
  double worst = 0.0;
  for (int r = 0; r < kSpeedRuns; ++r) {
    const auto t0 = Clock::now();
    const SolutionReport rep = manager::solve(inst, mgr, lib);
    worst = std::max(worst, seconds_since(t0));
    check_coverage(rep.plans, inst.n());
  }
  return {worst < kSpeedBudgetS, "slowest of " + std::to_string(kSpeedRuns) + " solves " + fmt(worst, 3) + " s"};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const TrainedWorker w100 = obtain_worker(100.0, "beta100");

  report(1, "oracle dominance", oracle_dominance(w100.model));
  report(2, "backtracking feasibility", backtracking_feasibility());
  report(3, "gradient correctness", gradient_correctness());
  report(4, "normalization invariants", normalization_invariants());
  report(5, "worker learning", worker_learning(w100));

  const TrainedManager m100 = obtain_manager(manager_config(100.0, Objective::MinMax), w100.model, "beta100_minmax");
  report(6, "manager learning", manager_learning(m100, w100.model));
  report(7, "vehicle head ablation", head_ablation());

  const TrainedWorker w10 = obtain_worker(10.0, "beta10");
  const TrainedManager m10 = obtain_manager(manager_config(10.0, Objective::MinMax), w10.model, "beta10_minmax");
  report(8, "beta sensitivity", beta_sensitivity(m100.model, w100.model, m10.model, w10.model));

  const TrainedManager mo = obtain_manager(manager_config(100.0, Objective::Overall), w100.model, "beta100_overall");
  report(9, "objective mode", objective_mode(m100.model, mo.model, w100.model));
  report(10, "inference speed", inference_speed(w100.model));

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt(seconds_since(t0), 5) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
