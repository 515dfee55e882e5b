#pragma once

// Straightforward reference implementations used to cross-check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mtsp/domain.hpp"

namespace ref {

struct Sim {
  std::vector<int> served;
  std::vector<int> rejected;
  std::vector<double> times;
  double length = 0.0;
  double cost = 0.0;
};

inline double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

/// Visits `tour` from the depot; a late customer is skipped, an early one
/// waits for its window to open.
inline Sim simulate(const mtsp::Instance& inst, const std::vector<int>& tour) {
  Sim s;
  double x = inst.depot.x, y = inst.depot.y, now = 0.0;
  for (int id : tour) {
    const auto& c = inst.customers[static_cast<std::size_t>(id)];
    const double arrive = now + dist(x, y, c.x, c.y);
    if (arrive > c.t) {
      s.rejected.push_back(id);
    } else {
      s.length += dist(x, y, c.x, c.y);
      now = arrive < c.s ? c.s : arrive;
      x = c.x;
      y = c.y;
      s.served.push_back(id);
      s.times.push_back(now);
    }
  }
  s.length += dist(x, y, inst.depot.x, inst.depot.y);
  const double k = static_cast<double>(tour.size());
  s.cost = s.length + (tour.empty() ? 0.0 : inst.beta * static_cast<double>(s.rejected.size()) / k);
  return s;
}

/// Length of depot -> served... -> depot.
inline double route_length(const mtsp::Instance& inst, const std::vector<int>& served) {
  double total = 0.0, x = inst.depot.x, y = inst.depot.y;
  for (int id : served) {
    const auto& c = inst.customers[static_cast<std::size_t>(id)];
    total += dist(x, y, c.x, c.y);
    x = c.x;
    y = c.y;
  }
  return served.empty() ? 0.0 : total + dist(x, y, inst.depot.x, inst.depot.y);
}

/// Best J over every ordered subset of `ids`, by brute force over
/// permutations of every subset.
inline double best_subtour_cost(const mtsp::Instance& inst, const std::vector<int>& ids) {
  if (ids.empty()) return 0.0;
  const std::size_t k = ids.size();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> sub;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (1u << i)) sub.push_back(ids[i]);
    std::sort(sub.begin(), sub.end());
    do {
      const Sim s = simulate(inst, sub);
      if (!s.rejected.empty()) continue;  // only sequences that serve everyone they visit
      const double rej = static_cast<double>(k - sub.size()) / static_cast<double>(k);
      best = std::min(best, s.length + inst.beta * rej);
    } while (std::next_permutation(sub.begin(), sub.end()));
  }
  return best;
}

/// Exact min-max cost by enumerating every assignment.
inline double exact_minmax(const mtsp::Instance& inst) {
  const std::size_t n = inst.n();
  const auto m = static_cast<std::size_t>(inst.m);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= m;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::vector<int>> groups(m);
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      groups[c % m].push_back(static_cast<int>(i));
      c /= m;
    }
    double worst = 0.0;
    for (const auto& g : groups) worst = std::max(worst, best_subtour_cost(inst, g));
    best = std::min(best, worst);
  }
  return best;
}

inline mtsp::Instance make(std::vector<mtsp::Customer> cs, int m = 1, double beta = 100.0) {
  mtsp::Instance inst;
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i].id = static_cast<int>(i);
  inst.customers = std::move(cs);
  inst.m = m;
  inst.beta = beta;
  return inst;
}

}  // namespace ref
