#include "mtsp/domain.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace mtsp {

void Instance::validate() const {
  if (customers.empty()) throw ContractError("instance has no customers");
  if (m < 1) throw ContractError("instance needs m >= 1, got " + std::to_string(m));
  if (!(beta >= 0.0)) throw ContractError("instance needs beta >= 0");
  for (std::size_t i = 0; i < customers.size(); ++i) {
    const Customer& c = customers[i];
    if (c.id != static_cast<int>(i)) {
      throw ContractError("customer ids must be 0..n-1 in order; position " + std::to_string(i) +
                          " holds id " + std::to_string(c.id));
    }
    if (c.s > c.t) throw ContractError("window inverted at id " + std::to_string(c.id));
  }
  if (!(depot.close > depot.open)) throw ContractError("depot close must exceed open");
}

Instance generate_instance(int n, int m, double beta, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ContractError("generate_instance needs n >= 1 and m >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> start(0.0, 3.0);

  Instance inst;
  inst.m = m;
  inst.beta = beta;
  inst.seed = seed;
  inst.customers.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Customer c;
    c.id = i;
    c.x = unit(rng);
    c.y = unit(rng);
    c.s = start(rng);
    c.t = c.s + 3.0;
    inst.customers.push_back(c);
  }
  return inst;
}

Instance make_subinstance(const Instance& parent, std::span<const int> ids) {
  Instance sub;
  sub.depot = parent.depot;
  sub.m = 1;
  sub.beta = parent.beta;
  sub.seed = parent.seed;
  sub.customers.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Customer c = parent.customers.at(static_cast<std::size_t>(ids[k]));
    c.id = static_cast<int>(k);
    sub.customers.push_back(c);
  }
  return sub;
}

DistanceMatrix::DistanceMatrix(const Instance& inst) : size_(inst.n() + 1), d_(size_ * size_, 0.0) {
  auto node = [&](std::size_t k) { return k == 0 ? inst.depot.pos() : inst.customers[k - 1].pos(); };
  for (std::size_t a = 0; a < size_; ++a) {
    for (std::size_t b = a + 1; b < size_; ++b) {
      const double d = euclid(node(a), node(b));
      d_[a * size_ + b] = d;
      d_[b * size_ + a] = d;
    }
  }
}

std::vector<std::vector<int>> Assignment::groups(int m) const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < vehicle_of.size(); ++i) {
    out.at(static_cast<std::size_t>(vehicle_of[i])).push_back(static_cast<int>(i));
  }
  return out;
}

void Assignment::validate(std::size_t n, int m) const {
  if (vehicle_of.size() != n) {
    throw ContractError("assignment covers " + std::to_string(vehicle_of.size()) + " customers, expected " +
                        std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (vehicle_of[i] < 0 || vehicle_of[i] >= m) {
      throw ContractError("customer " + std::to_string(i) + " assigned to invalid vehicle " +
                          std::to_string(vehicle_of[i]));
    }
  }
}

namespace {

template <class Dist>
SubTourPlan simulate(std::span<const int> tour, const Instance& inst, int vehicle, Dist&& dist) {
  SubTourPlan plan;
  plan.vehicle = vehicle;
  plan.served.reserve(tour.size());
  plan.service_times.reserve(tour.size());

  double clock = inst.depot.open;
  int last = -1;  // -1 = depot
  for (int id : tour) {
    const Customer& c = inst.customers.at(static_cast<std::size_t>(id));
    const double leg = dist(last, id);
    const double arrival = clock + leg;
    if (arrival > c.t) {
      plan.rejected.push_back(id);
      continue;
    }
    clock = std::max(arrival, c.s);
    plan.length += leg;
    plan.served.push_back(id);
    plan.service_times.push_back(clock);
    last = id;
  }
  if (last >= 0) {
    const double back = dist(last, -1);
    plan.length += back;
    plan.return_time = clock + back;
  }
  const std::size_t assigned = plan.assigned();
  plan.rej_rate = assigned == 0 ? 0.0 : static_cast<double>(plan.rejected.size()) / static_cast<double>(assigned);
  plan.hybrid_cost = evaluate_plan(plan, inst.beta);
  return plan;
}

}  // namespace

SubTourPlan backtrack(std::span<const int> tour, const Instance& inst, int vehicle) {
  return simulate(tour, inst, vehicle, [&](int a, int b) {
    const Point pa = a < 0 ? inst.depot.pos() : inst.customers[static_cast<std::size_t>(a)].pos();
    const Point pb = b < 0 ? inst.depot.pos() : inst.customers[static_cast<std::size_t>(b)].pos();
    return euclid(pa, pb);
  });
}

SubTourPlan backtrack(std::span<const int> tour, const Instance& inst, const DistanceMatrix& dist, int vehicle) {
  return simulate(tour, inst, vehicle, [&](int a, int b) {
    if (a < 0) return dist.depot_to(b);
    if (b < 0) return dist.depot_to(a);
    return dist.between(a, b);
  });
}

double evaluate_plan(const SubTourPlan& plan, double beta) noexcept { return plan.length + beta * plan.rej_rate; }

Objective parse_objective(const std::string& name) {
  if (name == "minmax") return Objective::MinMax;
  if (name == "overall") return Objective::Overall;
  throw ContractError("unknown objective '" + name + "' (expected minmax|overall)");
}

std::string to_string(Objective obj) { return obj == Objective::MinMax ? "minmax" : "overall"; }

void check_coverage(std::span<const SubTourPlan> plans, std::size_t n) {
  std::vector<int> seen(n, 0);
  auto mark = [&](int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw ContractError("plan references unknown customer " + std::to_string(id));
    }
    if (seen[static_cast<std::size_t>(id)]++) {
      throw ContractError("customer " + std::to_string(id) + " appears in more than one plan slot");
    }
  };
  for (const SubTourPlan& p : plans) {
    for (int id : p.served) mark(id);
    for (int id : p.rejected) mark(id);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw ContractError("customer " + std::to_string(i) + " is not covered by any plan");
  }
}

double objective_minmax(std::span<const SubTourPlan> plans, std::size_t n) {
  check_coverage(plans, n);
  if (plans.empty()) throw ContractError("objective_minmax needs at least one plan");
  double worst = plans.front().hybrid_cost;
  for (const SubTourPlan& p : plans) worst = std::max(worst, p.hybrid_cost);
  return worst;
}

double objective_overall(std::span<const SubTourPlan> plans, std::size_t n, double beta) {
  check_coverage(plans, n);
  if (plans.empty()) throw ContractError("objective_overall needs at least one plan");
  double total_length = 0.0;
  std::size_t rejected = 0;
  for (const SubTourPlan& p : plans) {
    total_length += p.length;
    rejected += p.rejected.size();
  }
  return total_length / static_cast<double>(plans.size()) +
         beta * static_cast<double>(rejected) / static_cast<double>(n);
}

const SubTourPlan& SolutionReport::worst_plan() const {
  if (plans.empty()) throw ContractError("report has no plans");
  auto it = std::max_element(plans.begin(), plans.end(),
                             [](const SubTourPlan& a, const SubTourPlan& b) { return a.hybrid_cost < b.hybrid_cost; });
  return *it;
}

std::vector<std::size_t> SolutionReport::assigned_counts() const {
  std::vector<std::size_t> out;
  out.reserve(plans.size());
  for (const SubTourPlan& p : plans) out.push_back(p.assigned());
  return out;
}

SolutionReport make_report(std::vector<SubTourPlan> plans, const Instance& inst, double wall_time) {
  if (plans.size() != static_cast<std::size_t>(inst.m)) {
    throw ContractError("expected " + std::to_string(inst.m) + " plans, got " + std::to_string(plans.size()));
  }
  SolutionReport r;
  r.minmax_cost = objective_minmax(plans, inst.n());
  r.overall_cost = objective_overall(plans, inst.n(), inst.beta);
  double total_length = 0.0;
  std::size_t rejected = 0;
  for (const SubTourPlan& p : plans) {
    total_length += p.length;
    rejected += p.rejected.size();
  }
  r.overall_length = total_length / static_cast<double>(plans.size());
  r.overall_rej = static_cast<double>(rejected) / static_cast<double>(inst.n());
  r.wall_time = wall_time;
  r.plans = std::move(plans);
  return r;
}

SolutionReport evaluate_assignment_in_order(const Assignment& a, const Instance& inst) {
  a.validate(inst.n(), inst.m);
  const auto groups = a.groups(inst.m);
  std::vector<SubTourPlan> plans;
  plans.reserve(groups.size());
  for (std::size_t b = 0; b < groups.size(); ++b) {
    plans.push_back(backtrack(groups[b], inst, static_cast<int>(b)));
  }
  return make_report(std::move(plans), inst);
}

}  // namespace mtsp
