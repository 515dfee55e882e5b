#pragma once

#include <cstdint>
#include <vector>

#include "mtsp/domain.hpp"
#include "mtsp/worker.hpp"

namespace mtsp::baselines {

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> inertia;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Rows of `points` share one
/// dimension. A cluster that loses all its points keeps its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, int max_iter, std::uint64_t seed);

/// (x, y, s, t) per customer, each column min-max scaled to [0, 1] over the
/// instance; a constant column maps to 0.
std::vector<std::vector<double>> kmeans_features(const Instance& inst);

Assignment kmeans_assign(const Instance& inst, int max_iter = 1000, std::uint64_t seed = 0);
Assignment random_assign(const Instance& inst, std::uint64_t seed);

/// Routes an externally produced assignment with the greedy worker.
SolutionReport solve_with_assignment(const Instance& inst, const Assignment& a, const worker::WorkerModel& worker);

SolutionReport kmeans_solve(const Instance& inst, const worker::WorkerModel& worker, int max_iter = 1000,
                            std::uint64_t seed = 0);
SolutionReport kmeans_solve(const Instance& inst, const worker::WorkerLibrary& workers, int max_iter = 1000,
                            std::uint64_t seed = 0);
SolutionReport random_solve(const Instance& inst, const worker::WorkerModel& worker, std::uint64_t seed);

}  // namespace mtsp::baselines
