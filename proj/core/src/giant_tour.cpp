#include "mtsp/giant_tour.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mtsp::baselines {

void GiantTour::validate(std::size_t n, int m) const {
  if (perm.size() != n) throw ContractError("giant tour has " + std::to_string(perm.size()) + " customers, expected " +
                                            std::to_string(n));
  std::vector<char> seen(n, 0);
  for (int c : perm) {
    if (c < 0 || static_cast<std::size_t>(c) >= n || seen[static_cast<std::size_t>(c)]++) {
      throw ContractError("giant tour perm is not a permutation of 0.." + std::to_string(n - 1));
    }
  }
  if (splits.size() + 1 != static_cast<std::size_t>(m)) {
    throw ContractError("giant tour has " + std::to_string(splits.size()) + " cuts, expected " + std::to_string(m - 1));
  }
  int prev = 0;
  for (int s : splits) {
    if (s < prev || static_cast<std::size_t>(s) > n) throw ContractError("giant tour cuts must be sorted within [0, n]");
    prev = s;
  }
}

std::vector<std::vector<int>> GiantTour::segments() const {
  std::vector<std::vector<int>> out;
  out.reserve(splits.size() + 1);
  std::size_t begin = 0;
  for (std::size_t k = 0; k <= splits.size(); ++k) {
    const std::size_t end = k < splits.size() ? static_cast<std::size_t>(splits[k]) : perm.size();
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(begin), perm.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }
  return out;
}

GiantTour random_giant_tour(std::size_t n, int m, std::mt19937_64& rng) {
  GiantTour gt;
  gt.perm.resize(n);
  std::iota(gt.perm.begin(), gt.perm.end(), 0);
  std::shuffle(gt.perm.begin(), gt.perm.end(), rng);
  std::uniform_int_distribution<int> cut(0, static_cast<int>(n));
  gt.splits.resize(static_cast<std::size_t>(m - 1));
  for (int& s : gt.splits) s = cut(rng);
  std::sort(gt.splits.begin(), gt.splits.end());
  return gt;
}

GiantTour greedy_giant_tour(const Instance& inst, const DistanceMatrix& dist) {
  const std::size_t n = inst.n();
  const auto m = static_cast<std::size_t>(inst.m);
  std::vector<std::vector<int>> routes(m);
  std::vector<double> clock(m, inst.depot.open);
  std::vector<int> pos(m, -1);
  std::vector<char> taken(n, 0);
  auto leg = [&](int from, int to) { return from < 0 ? dist.depot_to(to) : dist.between(from, to); };

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t b = 0; b < m; ++b) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n; ++c) {
        if (taken[c]) continue;
        const double d = leg(pos[b], static_cast<int>(c));
        if (clock[b] + d <= inst.customers[c].t && d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (best < 0) continue;
      taken[static_cast<std::size_t>(best)] = 1;
      clock[b] = std::max(clock[b] + best_d, inst.customers[static_cast<std::size_t>(best)].s);
      pos[b] = best;
      routes[b].push_back(best);
      progress = true;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (taken[c]) continue;
    auto smallest = std::min_element(routes.begin(), routes.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    smallest->push_back(static_cast<int>(c));
  }

  GiantTour gt;
  for (std::size_t b = 0; b < m; ++b) {
    gt.perm.insert(gt.perm.end(), routes[b].begin(), routes[b].end());
    if (b + 1 < m) gt.splits.push_back(static_cast<int>(gt.perm.size()));
  }
  return gt;
}

void swap_move(GiantTour& gt, std::size_t i, std::size_t j) { std::swap(gt.perm.at(i), gt.perm.at(j)); }

void reverse_move(GiantTour& gt, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  if (j >= gt.perm.size()) throw ContractError("reverse_move: index out of range");
  std::reverse(gt.perm.begin() + static_cast<std::ptrdiff_t>(i), gt.perm.begin() + static_cast<std::ptrdiff_t>(j) + 1);
}

void insert_move(GiantTour& gt, std::size_t i, std::size_t j) {
  if (i >= gt.perm.size() || j >= gt.perm.size()) throw ContractError("insert_move: index out of range");
  auto first = gt.perm.begin();
  if (i < j) {
    std::rotate(first + static_cast<std::ptrdiff_t>(i), first + static_cast<std::ptrdiff_t>(i) + 1,
                first + static_cast<std::ptrdiff_t>(j) + 1);
  } else if (j < i) {
    std::rotate(first + static_cast<std::ptrdiff_t>(j), first + static_cast<std::ptrdiff_t>(i),
                first + static_cast<std::ptrdiff_t>(i) + 1);
  }
}

bool shift_split(GiantTour& gt, std::size_t k, int delta) {
  if (k >= gt.splits.size()) throw ContractError("shift_split: cut index out of range");
  const int lo = k == 0 ? 0 : gt.splits[k - 1];
  const int hi = k + 1 < gt.splits.size() ? gt.splits[k + 1] : static_cast<int>(gt.perm.size());
  const int next = gt.splits[k] + delta;
  if (next < lo || next > hi) return false;
  gt.splits[k] = next;
  return true;
}

void random_move(GiantTour& gt, std::mt19937_64& rng, std::size_t span) {
  const std::size_t n = gt.perm.size();
  const int kinds = gt.splits.empty() ? 3 : 4;
  const int kind = std::uniform_int_distribution<int>(0, kinds - 1)(rng);
  if (kind == 3 || n < 2) {
    if (gt.splits.empty()) return;
    const auto k = std::uniform_int_distribution<std::size_t>(0, gt.splits.size() - 1)(rng);
    const int delta = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
    if (!shift_split(gt, k, delta)) shift_split(gt, k, -delta);
    return;
  }
  span = std::clamp<std::size_t>(span, 1, n - 1);
  const auto i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  const std::size_t lo = i >= span ? i - span : 0;
  const std::size_t hi = std::min(n - 1, i + span);
  std::size_t j = std::uniform_int_distribution<std::size_t>(lo, hi - 1)(rng);
  if (j >= i) ++j;
  switch (kind) {
    case 0: swap_move(gt, i, j); break;
    case 1: reverse_move(gt, i, j); break;
    default: insert_move(gt, i, j); break;
  }
}

SolutionReport evaluate_giant(const GiantTour& gt, const Instance& inst, const DistanceMatrix& dist) {
  gt.validate(inst.n(), inst.m);
  const auto segs = gt.segments();
  std::vector<SubTourPlan> plans;
  plans.reserve(segs.size());
  for (std::size_t b = 0; b < segs.size(); ++b) plans.push_back(backtrack(segs[b], inst, dist, static_cast<int>(b)));
  return make_report(std::move(plans), inst);
}

SolutionReport evaluate_giant(const GiantTour& gt, const Instance& inst) {
  return evaluate_giant(gt, inst, DistanceMatrix(inst));
}

double giant_cost(const GiantTour& gt, const Instance& inst, const DistanceMatrix& dist, Objective obj) {
  const std::size_t n = gt.perm.size();
  double worst = -std::numeric_limits<double>::infinity();
  double total_length = 0.0;
  std::size_t total_rejected = 0;
  std::size_t begin = 0;
  for (std::size_t k = 0; k <= gt.splits.size(); ++k) {
    const std::size_t end = k < gt.splits.size() ? static_cast<std::size_t>(gt.splits[k]) : n;
    double clock = inst.depot.open, length = 0.0;
    int last = -1;
    std::size_t rejected = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const int id = gt.perm[p];
      const Customer& c = inst.customers[static_cast<std::size_t>(id)];
      const double leg = last < 0 ? dist.depot_to(id) : dist.between(last, id);
      const double arrival = clock + leg;
      if (arrival > c.t) {
        ++rejected;
        continue;
      }
      clock = std::max(arrival, c.s);
      length += leg;
      last = id;
    }
    if (last >= 0) length += dist.depot_to(last);
    const std::size_t assigned = end - begin;
    const double rej_rate =
        assigned == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(assigned);
    worst = std::max(worst, length + inst.beta * rej_rate);
    total_length += length;
    total_rejected += rejected;
    begin = end;
  }
  if (obj == Objective::MinMax) return worst;
  return total_length / static_cast<double>(gt.splits.size() + 1) +
         inst.beta * static_cast<double>(total_rejected) / static_cast<double>(n);
}

}  // namespace mtsp::baselines
