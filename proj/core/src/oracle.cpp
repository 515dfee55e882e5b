#include "mtsp/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

namespace mtsp::oracle {

namespace {

using Mask = std::uint32_t;

struct SequenceBest {
  bool found = false;
  double length = 0.0;
  std::vector<int> seq;
};

/// Shortest feasible ordering of every servable subset of `pool`, keyed by a
/// bitmask over positions in `pool`. Length is accumulated leg by leg exactly
/// as backtrack does so costs reproduce bit for bit.
class SubsetTable {
 public:
  SubsetTable(std::span<const int> pool, const Instance& inst) : pool_(pool.begin(), pool.end()), inst_(inst) {
    best_.resize(std::size_t{1} << pool_.size());
    best_[0].found = true;
    std::vector<int> seq;
    dfs(0, -1, inst.depot.open, 0.0, seq);
  }

  const SequenceBest& at(Mask m) const { return best_[m]; }
  std::size_t size() const { return pool_.size(); }
  int id(std::size_t pos) const { return pool_[pos]; }

 private:
  double leg(int from, int to) const {
    const Point a = from < 0 ? inst_.depot.pos() : inst_.customers[static_cast<std::size_t>(from)].pos();
    const Point b = to < 0 ? inst_.depot.pos() : inst_.customers[static_cast<std::size_t>(to)].pos();
    return euclid(a, b);
  }

  void dfs(Mask used, int last, double clock, double length, std::vector<int>& seq) {
    for (std::size_t p = 0; p < pool_.size(); ++p) {
      const Mask bit = Mask{1} << p;
      if (used & bit) continue;
      const int id = pool_[p];
      const Customer& c = inst_.customers[static_cast<std::size_t>(id)];
      const double l = leg(last, id);
      const double arrival = clock + l;
      if (arrival > c.t) continue;
      seq.push_back(id);
      const Mask next = used | bit;
      const double len = length + l;
      const double closed = len + leg(id, -1);
      SequenceBest& slot = best_[next];
      if (!slot.found || closed < slot.length || (closed == slot.length && seq < slot.seq)) {
        slot.found = true;
        slot.length = closed;
        slot.seq = seq;
      }
      dfs(next, id, std::max(arrival, c.s), len, seq);
      seq.pop_back();
    }
  }

  std::vector<int> pool_;
  const Instance& inst_;
  std::vector<SequenceBest> best_;
};

struct Choice {
  double cost = std::numeric_limits<double>::infinity();
  Mask served = 0;
};

/// Best served subset inside `assigned`, with the documented tie-breaks.
Choice best_within(const SubsetTable& table, Mask assigned, double beta) {
  const int total = std::popcount(assigned);
  Choice best;
  if (total == 0) {
    best.cost = 0.0;
    return best;
  }
  const SequenceBest* best_seq = nullptr;
  int best_count = -1;
  for (Mask sub = assigned;; sub = (sub - 1) & assigned) {
    const SequenceBest& s = table.at(sub);
    if (s.found) {
      const int served = std::popcount(sub);
      const double rej = static_cast<double>(total - served) / static_cast<double>(total);
      const double cost = s.length + beta * rej;
      const bool better = cost < best.cost ||
                          (cost == best.cost && (served > best_count || (served == best_count && s.seq < best_seq->seq)));
      if (better) {
        best.cost = cost;
        best.served = sub;
        best_seq = &s;
        best_count = served;
      }
    }
    if (sub == 0) break;
  }
  return best;
}

SubTourPlan materialise(const SubsetTable& table, Mask assigned, Mask served, const Instance& inst, int vehicle) {
  SubTourPlan plan = backtrack(table.at(served).seq, inst, vehicle);
  for (std::size_t p = 0; p < table.size(); ++p) {
    const Mask bit = Mask{1} << p;
    if ((assigned & bit) && !(served & bit)) plan.rejected.push_back(table.id(p));
  }
  std::sort(plan.rejected.begin(), plan.rejected.end());
  const std::size_t n = plan.assigned();
  plan.rej_rate = n == 0 ? 0.0 : static_cast<double>(plan.rejected.size()) / static_cast<double>(n);
  plan.hybrid_cost = evaluate_plan(plan, inst.beta);
  return plan;
}

}  // namespace

SubTourPlan best_subtour_exact(std::span<const int> assigned, const Instance& inst, int vehicle,
                               const OracleLimits& limits) {
  if (static_cast<int>(assigned.size()) > limits.max_per_vehicle) {
    throw LimitError("best_subtour_exact: " + std::to_string(assigned.size()) +
                     " customers exceed max_per_vehicle = " + std::to_string(limits.max_per_vehicle));
  }
  std::vector<int> pool(assigned.begin(), assigned.end());
  std::sort(pool.begin(), pool.end());
  const SubsetTable table(pool, inst);
  const Mask all = pool.empty() ? 0 : static_cast<Mask>((std::size_t{1} << pool.size()) - 1);
  const Choice c = best_within(table, all, inst.beta);
  return materialise(table, all, c.served, inst, vehicle);
}

SolutionReport solve_exact(const Instance& inst, const OracleLimits& limits) {
  inst.validate();
  const std::size_t n = inst.n();
  if (static_cast<int>(n) > limits.max_n) {
    throw LimitError("solve_exact: n = " + std::to_string(n) + " exceeds max_n = " + std::to_string(limits.max_n));
  }
  std::vector<int> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<int>(i);
  const SubsetTable table(pool, inst);

  const std::size_t subsets = std::size_t{1} << n;
  std::vector<Choice> per_subset(subsets);
  for (Mask a = 0; a < subsets; ++a) per_subset[a] = best_within(table, a, inst.beta);

  const int m = inst.m;
  std::vector<int> digits(n, 0);  // digits[0] most significant
  std::vector<Mask> masks(static_cast<std::size_t>(m));
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_assign;
  while (true) {
    std::fill(masks.begin(), masks.end(), 0);
    for (std::size_t i = 0; i < n; ++i) masks[static_cast<std::size_t>(digits[i])] |= Mask{1} << i;
    double worst = 0.0;
    for (Mask mk : masks) worst = std::max(worst, per_subset[mk].cost);
    if (worst < best_cost) {
      best_cost = worst;
      best_assign = digits;
    }
    // increment: last customer is the least significant digit
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < m) break;
      digits[pos] = 0;
      if (pos == 0) {
        pos = n + 1;
        break;
      }
    }
    if (pos == n + 1) break;
  }

  std::fill(masks.begin(), masks.end(), 0);
  for (std::size_t i = 0; i < n; ++i) masks[static_cast<std::size_t>(best_assign[i])] |= Mask{1} << i;
  std::vector<SubTourPlan> plans;
  plans.reserve(static_cast<std::size_t>(m));
  for (int b = 0; b < m; ++b) {
    const Mask mk = masks[static_cast<std::size_t>(b)];
    plans.push_back(materialise(table, mk, per_subset[mk].served, inst, b));
  }
  return make_report(std::move(plans), inst);
}

}  // namespace mtsp::oracle
