#include "mtsp/metaheuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mtsp::baselines {

void MetaConfig::validate() const {
  if (iterations < 0) throw ContractError("meta config: iterations must be >= 0");
  if (sa.population < 1 || sa.sub_iterations < 1 || sa.moves < 1) throw ContractError("meta config: sa sizes must be >= 1");
  if (!(sa.t_initial > 0.0) || !(sa.t_final > 0.0)) throw ContractError("meta config: sa temperatures must be > 0");
  if (!(sa.step > 0.0) || !(sa.damp > 0.0)) throw ContractError("meta config: sa step and damp must be > 0");
  if (!(ts.threshold >= 0.0)) throw ContractError("meta config: ts threshold must be >= 0");
  if (ba.population < 1) throw ContractError("meta config: ba population must be >= 1");
  for (double r : {ba.selected_ratio, ba.selected_bee_ratio, ba.elite_ratio, ba.elite_bee_ratio, ba.radius,
                   ba.radius_damp}) {
    if (!(r > 0.0)) throw ContractError("meta config: ba ratios must be > 0");
  }
}

nlohmann::json to_json(const MetaConfig& c) {
  return {{"iterations", c.iterations},
          {"objective", to_string(c.objective)},
          {"sa",
           {{"population", c.sa.population},
            {"sub_iterations", c.sa.sub_iterations},
            {"moves", c.sa.moves},
            {"mutation_rate", c.sa.mutation_rate},
            {"step", c.sa.step},
            {"damp", c.sa.damp},
            {"t_initial", c.sa.t_initial},
            {"t_final", c.sa.t_final}}},
          {"ts", {{"actions", c.ts.actions}, {"tabu_length", c.ts.tabu_length}, {"threshold", c.ts.threshold}}},
          {"ba",
           {{"population", c.ba.population},
            {"selected_ratio", c.ba.selected_ratio},
            {"selected_bee_ratio", c.ba.selected_bee_ratio},
            {"elite_ratio", c.ba.elite_ratio},
            {"elite_bee_ratio", c.ba.elite_bee_ratio},
            {"radius", c.ba.radius},
            {"radius_damp", c.ba.radius_damp}}}};
}

MetaConfig meta_config_from_json(const nlohmann::json& j, MetaConfig base) {
  nlohmann::json merged = to_json(base);
  merged.merge_patch(j);
  MetaConfig c;
  c.iterations = merged.at("iterations").get<int>();
  c.objective = parse_objective(merged.at("objective").get<std::string>());
  const auto& sa = merged.at("sa");
  c.sa = {sa.at("population").get<int>(), sa.at("sub_iterations").get<int>(), sa.at("moves").get<int>(),
          sa.at("mutation_rate").get<double>(), sa.at("step").get<double>(), sa.at("damp").get<double>(),
          sa.at("t_initial").get<double>(), sa.at("t_final").get<double>()};
  const auto& ts = merged.at("ts");
  c.ts = {ts.at("actions").get<int>(), ts.at("tabu_length").get<int>(), ts.at("threshold").get<double>()};
  const auto& ba = merged.at("ba");
  c.ba = {ba.at("population").get<int>(),       ba.at("selected_ratio").get<double>(),
          ba.at("selected_bee_ratio").get<double>(), ba.at("elite_ratio").get<double>(),
          ba.at("elite_bee_ratio").get<double>(), ba.at("radius").get<double>(),
          ba.at("radius_damp").get<double>()};
  c.validate();
  return c;
}

namespace {

struct Candidate {
  GiantTour gt;
  double cost = 0.0;
};

void sort_by_cost(std::vector<Candidate>& v) {
  std::stable_sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
}

MetaResult finish(const Instance& inst, const DistanceMatrix& dist, Candidate best, std::vector<double> trace) {
  MetaResult r;
  r.report = evaluate_giant(best.gt, inst, dist);
  r.best = std::move(best.gt);
  r.trace = std::move(trace);
  return r;
}

std::size_t span_of(double fraction, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
}

}  // namespace

MetaResult sa_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  inst.validate();
  const DistanceMatrix dist(inst);
  const std::size_t n = inst.n();
  std::mt19937_64 rng(seed);
  const SaParams& p = cfg.sa;
  const double rate = p.mutation_rate < 0.0 ? 1.0 / static_cast<double>(n) : p.mutation_rate;
  std::binomial_distribution<int> extra_moves(static_cast<int>(n), std::min(1.0, rate));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto cost = [&](const GiantTour& gt) { return giant_cost(gt, inst, dist, cfg.objective); };

  std::vector<Candidate> pop(static_cast<std::size_t>(p.population));
  for (auto& c : pop) {
    c.gt = random_giant_tour(n, inst.m, rng);
    c.cost = cost(c.gt);
  }
  Candidate best = *std::min_element(pop.begin(), pop.end(),
                                     [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
  std::vector<double> trace{best.cost};

  const double decay = cfg.iterations > 1 ? std::pow(p.t_final / p.t_initial, 1.0 / (cfg.iterations - 1)) : 1.0;
  double temperature = p.t_initial;
  double step = p.step;
  std::vector<Candidate> spawn;
  spawn.reserve(pop.size() * static_cast<std::size_t>(p.moves));
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int sub = 0; sub < p.sub_iterations; ++sub) {
      spawn.clear();
      for (const Candidate& parent : pop) {
        for (int k = 0; k < p.moves; ++k) {
          Candidate child{parent.gt, 0.0};
          const int count = std::max(1, extra_moves(rng));
          for (int r = 0; r < count; ++r) random_move(child.gt, rng, span_of(step, n));
          child.cost = cost(child.gt);
          spawn.push_back(std::move(child));
        }
      }
      sort_by_cost(spawn);
      for (std::size_t i = 0; i < pop.size(); ++i) {
        const double delta = (spawn[i].cost - pop[i].cost) / std::max(pop[i].cost, 1e-12);
        if (delta <= 0.0 || unit(rng) <= std::exp(-delta / temperature)) pop[i] = spawn[i];
        if (pop[i].cost < best.cost) best = pop[i];
      }
    }
    temperature *= decay;
    step *= p.damp;
    trace.push_back(best.cost);
  }
  return finish(inst, dist, std::move(best), std::move(trace));
}

MetaResult ts_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  inst.validate();
  const DistanceMatrix dist(inst);
  const std::size_t n = inst.n();
  std::mt19937_64 rng(seed);
  auto cost = [&](const GiantTour& gt) { return giant_cost(gt, inst, dist, cfg.objective); };

  struct Action {
    int kind;  // 0 swap, 1 reverse, 2 cut shift
    std::size_t a;
    std::size_t b;
  };
  std::vector<Action> actions;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) actions.push_back({0, i, j});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) actions.push_back({1, i, j});
  for (std::size_t k = 0; k + 1 < static_cast<std::size_t>(inst.m); ++k) {
    actions.push_back({2, k, 1});
    actions.push_back({2, k, 0});
  }
  const std::size_t n2 = n * n;
  const std::size_t per_iter = cfg.ts.actions < 0 ? n2 : static_cast<std::size_t>(cfg.ts.actions);
  const int tenure = cfg.ts.tabu_length < 0 ? static_cast<int>((n2 + 1) / 2) : cfg.ts.tabu_length;

  auto apply = [](GiantTour& gt, const Action& act) {
    switch (act.kind) {
      case 0: swap_move(gt, act.a, act.b); return true;
      case 1: reverse_move(gt, act.a, act.b); return true;
      default: return shift_split(gt, act.a, act.b == 1 ? 1 : -1);
    }
  };

  Candidate cur{greedy_giant_tour(inst, dist), 0.0};
  cur.cost = cost(cur.gt);
  Candidate best = cur;
  std::vector<double> trace{best.cost};
  std::vector<int> tabu(actions.size(), 0);
  std::vector<std::size_t> order(actions.size());
  std::iota(order.begin(), order.end(), 0);
  double sweep_start = best.cost;

  for (int it = 0; it < cfg.iterations && !actions.empty(); ++it) {
    if (per_iter < order.size()) std::shuffle(order.begin(), order.end(), rng);
    const std::size_t count = std::min(per_iter, order.size());
    std::size_t chosen = actions.size();
    Candidate next;
    next.cost = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t a = order[k];
      Candidate trial{cur.gt, 0.0};
      if (!apply(trial.gt, actions[a])) continue;
      trial.cost = cost(trial.gt);
      const bool admissible = tabu[a] == 0 || trial.cost < best.cost;
      if (admissible && (trial.cost < next.cost || (trial.cost == next.cost && a < chosen))) {
        next = std::move(trial);
        chosen = a;
      }
    }
    if (chosen == actions.size()) break;
    for (int& t : tabu)
      if (t > 0) --t;
    tabu[chosen] = tenure;
    cur = std::move(next);
    if (cur.cost < best.cost) best = cur;
    trace.push_back(best.cost);
    if ((it + 1) % static_cast<int>(n) == 0) {
      if (sweep_start - best.cost < cfg.ts.threshold) break;
      sweep_start = best.cost;
    }
  }
  return finish(inst, dist, std::move(best), std::move(trace));
}

MetaResult ba_solve(const Instance& inst, const MetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  inst.validate();
  const DistanceMatrix dist(inst);
  const std::size_t n = inst.n();
  std::mt19937_64 rng(seed);
  const BaParams& p = cfg.ba;
  auto cost = [&](const GiantTour& gt) { return giant_cost(gt, inst, dist, cfg.objective); };
  auto round_count = [](double x) { return static_cast<std::size_t>(std::lround(x)); };

  const auto scouts = static_cast<std::size_t>(p.population);
  const std::size_t selected = std::min(scouts, round_count(p.selected_ratio * static_cast<double>(scouts)));
  const std::size_t elite = std::min(selected, round_count(p.elite_ratio * static_cast<double>(selected)));
  const std::size_t selected_bees = round_count(p.selected_bee_ratio * static_cast<double>(scouts));
  const std::size_t elite_bees = round_count(p.elite_bee_ratio * static_cast<double>(selected_bees));

  std::vector<Candidate> bees(scouts);
  for (auto& b : bees) {
    b.gt = random_giant_tour(n, inst.m, rng);
    b.cost = cost(b.gt);
  }
  sort_by_cost(bees);
  Candidate best = bees.front();
  std::vector<double> trace{best.cost};
  double radius = p.radius;

  auto dance = [&](Candidate& site, std::size_t recruits) {
    Candidate found;
    found.cost = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < recruits; ++r) {
      Candidate bee{site.gt, 0.0};
      random_move(bee.gt, rng, span_of(radius, n));
      bee.cost = cost(bee.gt);
      if (bee.cost < found.cost) found = std::move(bee);
    }
    if (found.cost < site.cost) site = std::move(found);
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < elite; ++i) dance(bees[i], elite_bees);
    for (std::size_t i = elite; i < selected; ++i) dance(bees[i], selected_bees);
    for (std::size_t i = selected; i < scouts; ++i) {
      bees[i].gt = random_giant_tour(n, inst.m, rng);
      bees[i].cost = cost(bees[i].gt);
    }
    sort_by_cost(bees);
    if (bees.front().cost < best.cost) best = bees.front();
    radius *= p.radius_damp;
    trace.push_back(best.cost);
  }
  return finish(inst, dist, std::move(best), std::move(trace));
}

}  // namespace mtsp::baselines
