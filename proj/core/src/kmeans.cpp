#include "mtsp/kmeans.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>

#include "mtsp/manager.hpp"

namespace mtsp::baselines {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, int max_iter, std::uint64_t seed) {
  if (k < 1) throw ContractError("kmeans: k must be >= 1");
  if (points.empty()) throw ContractError("kmeans: no points");
  const std::size_t n = points.size(), K = static_cast<std::size_t>(k);
  std::mt19937_64 rng(seed);
  KMeansResult r;

  r.centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (r.centroids.size() < K) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : r.centroids) d2[i] = std::min(d2[i], sq_dist(points[i], c));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> dist(d2.begin(), d2.end());
      pick = dist(rng);
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    r.centroids.push_back(points[pick]);
  }

  r.labels.assign(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(points[i], r.centroids[0]);
      for (std::size_t c = 1; c < K; ++c) {
        const double d = sq_dist(points[i], r.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
      inertia += best_d;
    }
    r.inertia.push_back(inertia);
    r.iterations = it + 1;
    if (!changed) break;
    std::vector<std::vector<double>> sum(K, std::vector<double>(points[0].size(), 0.0));
    std::vector<std::size_t> count(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.labels[i]);
      for (std::size_t d = 0; d < points[i].size(); ++d) sum[c][d] += points[i][d];
      ++count[c];
    }
    for (std::size_t c = 0; c < K; ++c) {
      if (count[c] == 0) continue;
      for (std::size_t d = 0; d < sum[c].size(); ++d) r.centroids[c][d] = sum[c][d] / static_cast<double>(count[c]);
    }
  }
  return r;
}

std::vector<std::vector<double>> kmeans_features(const Instance& inst) {
  std::vector<std::vector<double>> f;
  f.reserve(inst.n());
  for (const Customer& c : inst.customers) f.push_back({c.x, c.y, c.s, c.t});
  for (std::size_t d = 0; d < 4; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : f) {
      lo = std::min(lo, row[d]);
      hi = std::max(hi, row[d]);
    }
    for (auto& row : f) row[d] = hi > lo ? (row[d] - lo) / (hi - lo) : 0.0;
  }
  return f;
}

Assignment kmeans_assign(const Instance& inst, int max_iter, std::uint64_t seed) {
  inst.validate();
  Assignment a;
  a.vehicle_of = kmeans(kmeans_features(inst), inst.m, max_iter, seed).labels;
  return a;
}

Assignment random_assign(const Instance& inst, std::uint64_t seed) {
  inst.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, inst.m - 1);
  Assignment a;
  a.vehicle_of.resize(inst.n());
  for (int& v : a.vehicle_of) v = pick(rng);
  return a;
}

SolutionReport solve_with_assignment(const Instance& inst, const Assignment& a, const worker::WorkerModel& worker) {
  const Instance* one = &inst;
  auto reports = manager::route_assignments(std::span<const Instance* const>(&one, 1),
                                            std::span<const Assignment>(&a, 1), worker);
  return std::move(reports.front());
}

SolutionReport kmeans_solve(const Instance& inst, const worker::WorkerModel& worker, int max_iter,
                            std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SolutionReport r = solve_with_assignment(inst, kmeans_assign(inst, max_iter, seed), worker);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

SolutionReport kmeans_solve(const Instance& inst, const worker::WorkerLibrary& workers, int max_iter,
                            std::uint64_t seed) {
  return kmeans_solve(inst, workers.select(inst.n(), inst.m), max_iter, seed);
}

SolutionReport random_solve(const Instance& inst, const worker::WorkerModel& worker, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SolutionReport r = solve_with_assignment(inst, random_assign(inst, seed), worker);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace mtsp::baselines
