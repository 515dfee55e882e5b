#pragma once

#include <random>
#include <vector>

#include "mtsp/domain.hpp"

namespace mtsp::baselines {

/// A permutation of all customers cut into m consecutive segments. Segment b
/// is perm[splits[b-1], splits[b]) with implicit cuts at 0 and n.
struct GiantTour {
  std::vector<int> perm;
  std::vector<int> splits;  // m-1 sorted cut positions in [0, n]

  std::size_t n() const noexcept { return perm.size(); }
  int m() const noexcept { return static_cast<int>(splits.size()) + 1; }
  void validate(std::size_t n, int m) const;
  std::vector<std::vector<int>> segments() const;

  bool operator==(const GiantTour&) const = default;
};

GiantTour random_giant_tour(std::size_t n, int m, std::mt19937_64& rng);

/// Vehicles take turns appending their nearest unassigned customer that they
/// can still reach before its deadline. Customers no vehicle
/// can reach go to the vehicle holding the fewest customers.
GiantTour greedy_giant_tour(const Instance& inst, const DistanceMatrix& dist);

// Neighbourhood moves. Each returns a valid GiantTour for valid input.
void swap_move(GiantTour& gt, std::size_t i, std::size_t j);
/// Reverses perm[min(i,j) .. max(i,j)] inclusive.
void reverse_move(GiantTour& gt, std::size_t i, std::size_t j);
/// Removes perm[i] and reinserts it so that it ends up at index j.
void insert_move(GiantTour& gt, std::size_t i, std::size_t j);
/// Moves cut k by delta (+1 or -1); returns false and leaves gt unchanged if
/// the cut would leave [0, n] or pass a neighbouring cut.
bool shift_split(GiantTour& gt, std::size_t k, int delta);

/// One random move. The second position of swap, reverse and insert lies
/// within `span` positions of the first.
void random_move(GiantTour& gt, std::mt19937_64& rng, std::size_t span);

SolutionReport evaluate_giant(const GiantTour& gt, const Instance& inst, const DistanceMatrix& dist);
SolutionReport evaluate_giant(const GiantTour& gt, const Instance& inst);

/// Objective value only, identical to evaluate_giant(...).cost(obj) without
/// building plans.
double giant_cost(const GiantTour& gt, const Instance& inst, const DistanceMatrix& dist, Objective obj);

}  // namespace mtsp::baselines
