#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/giant_tour.hpp"

namespace mtsp::baselines {

struct SaParams {
  int population = 100;
  int sub_iterations = 10;
  int moves = 15;
  double mutation_rate = -1.0;  // negative means 1/n
  double step = 0.49;
  double damp = 1.0;
  double t_initial = 10000.0;
  double t_final = 1.0;
};

struct TsParams {
  int actions = -1;        // negative means n^2
  int tabu_length = -1;    // negative means n^2 / 2
  double threshold = 1e-6;
};

struct BaParams {
  int population = 500;
  double selected_ratio = 0.9;
  double selected_bee_ratio = 0.1;
  double elite_ratio = 0.2;
  double elite_bee_ratio = 2.0;
  double radius = 1.0;
  double radius_damp = 0.99;
};

struct MetaConfig {
  int iterations = 1000;
  Objective objective = Objective::MinMax;
  SaParams sa;
  TsParams ts;
  BaParams ba;

  void validate() const;
};

nlohmann::json to_json(const MetaConfig& c);
MetaConfig meta_config_from_json(const nlohmann::json& j, MetaConfig base = {});

struct MetaResult {
  SolutionReport report;
  GiantTour best;
  /// Best-so-far cost after initialisation and after every iteration.
  std::vector<double> trace;
};

/// Population simulated annealing: every member spawns `moves` mutants per
/// sub-iteration, the best mutants replace members under the Metropolis rule
/// on relative cost change, and the temperature decays geometrically from
/// t_initial to t_final.
MetaResult sa_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed);

/// Tabu search over swap, reverse and cut-shift actions from the greedy
/// construction. Stops early when a sweep of n iterations improves the best
/// cost by less than the threshold.
MetaResult ts_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed);

/// Bees algorithm with elite and selected sites and random scouts. The dance
/// radius, as a fraction of n, bounds how far a move may displace a customer.
MetaResult ba_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed);

}  // namespace mtsp::baselines
