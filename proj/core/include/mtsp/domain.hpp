#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtsp {

/// Raised when a caller violates a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Euclidean distance; travel time equals distance (unit speed).
inline double euclid(Point a, Point b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct Customer {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double s = 0.0;  // window start
  double t = 0.0;  // deadline

  Point pos() const noexcept { return {x, y}; }
};

/// The depot's unbounded deadline is stored as a finite horizon; the return
/// leg is never checked against it.
struct Depot {
  double x = 0.5;
  double y = 0.5;
  double open = 0.0;
  double close = 10.0;

  Point pos() const noexcept { return {x, y}; }
};

struct Instance {
  std::vector<Customer> customers;
  Depot depot;
  int m = 1;
  double beta = 100.0;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return customers.size(); }

  /// Throws ContractError on n == 0, m < 1, beta < 0, s > t or ids that are
  /// not exactly 0..n-1 in order.
  void validate() const;
};

/// Customers i.i.d. on the unit square, s ~ U[0,3], t = s + 3, depot at the
/// centre with window [0, 10].
Instance generate_instance(int n, int m, double beta, std::uint64_t seed);

/// Builds a single-vehicle instance holding `ids` (renumbered 0..k-1, in the
/// given order) and the parent's depot.
Instance make_subinstance(const Instance& parent, std::span<const int> ids);

/// Node 0 is the depot, node i+1 is customer i.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(const Instance& inst);

  double depot_to(int customer) const noexcept { return d_[static_cast<std::size_t>(customer) + 1]; }
  double between(int a, int b) const noexcept {
    return d_[(static_cast<std::size_t>(a) + 1) * size_ + static_cast<std::size_t>(b) + 1];
  }
  std::size_t nodes() const noexcept { return size_; }

 private:
  std::size_t size_ = 0;
  std::vector<double> d_;
};

struct Assignment {
  std::vector<int> vehicle_of;
  std::optional<double> logprob;

  /// Customer ids grouped by vehicle, ascending within each group.
  std::vector<std::vector<int>> groups(int m) const;
  void validate(std::size_t n, int m) const;
};

struct SubTourPlan {
  int vehicle = 0;
  std::vector<int> served;
  std::vector<int> rejected;
  std::vector<double> service_times;
  double length = 0.0;
  double return_time = 0.0;
  double rej_rate = 0.0;
  double hybrid_cost = 0.0;

  std::size_t assigned() const noexcept { return served.size() + rejected.size(); }
};

/// Simulates `tour` from the depot at time 0. A customer whose arrival is
/// strictly later than its deadline is dropped and the clock reverts;
/// otherwise the clock advances to max(arrival, s). Ids index
/// `inst.customers`.
SubTourPlan backtrack(std::span<const int> tour, const Instance& inst, int vehicle = 0);
SubTourPlan backtrack(std::span<const int> tour, const Instance& inst, const DistanceMatrix& dist,
                      int vehicle = 0);

/// J = length + beta * rej_rate.
double evaluate_plan(const SubTourPlan& plan, double beta) noexcept;

enum class Objective { MinMax, Overall };

Objective parse_objective(const std::string& name);
std::string to_string(Objective obj);

/// Throws ContractError unless the plans' served and rejected sets partition
/// 0..n-1.
void check_coverage(std::span<const SubTourPlan> plans, std::size_t n);

double objective_minmax(std::span<const SubTourPlan> plans, std::size_t n);
double objective_overall(std::span<const SubTourPlan> plans, std::size_t n, double beta);

struct SolutionReport {
  std::vector<SubTourPlan> plans;
  double minmax_cost = 0.0;
  double overall_length = 0.0;
  double overall_rej = 0.0;
  double overall_cost = 0.0;
  double wall_time = 0.0;

  double cost(Objective obj) const noexcept { return obj == Objective::MinMax ? minmax_cost : overall_cost; }
  /// The plan attaining minmax_cost (first on ties).
  const SubTourPlan& worst_plan() const;
  std::vector<std::size_t> assigned_counts() const;
};

SolutionReport make_report(std::vector<SubTourPlan> plans, const Instance& inst, double wall_time = 0.0);

/// Routes every vehicle's customers in the given order (ascending ids for
/// `groups()` output) through backtrack.
SolutionReport evaluate_assignment_in_order(const Assignment& a, const Instance& inst);

}  // namespace mtsp
