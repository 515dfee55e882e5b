#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/domain.hpp"

namespace mtsp::records {

/// One solved instance. `length` and `rej_rate` are those of the worst
/// vehicle under the min-max objective and the fleet statistics under the
/// overall objective.
struct InstanceRecord {
  std::string solver;
  Objective objective = Objective::MinMax;
  std::size_t index = 0;
  std::uint64_t instance_seed = 0;
  std::size_t n = 0;
  int m = 1;
  double beta = 0.0;
  double cost = 0.0;
  double minmax_cost = 0.0;
  double overall_cost = 0.0;
  double length = 0.0;
  double rej_rate = 0.0;
  double wall_time = 0.0;
  std::vector<SubTourPlan> plans;
};

InstanceRecord make_record(const SolutionReport& report, const Instance& inst, const std::string& solver,
                           Objective objective, std::size_t index);

nlohmann::json to_json(const InstanceRecord& r);
InstanceRecord record_from_json(const nlohmann::json& j);

void write_records(const std::filesystem::path& path, const std::vector<InstanceRecord>& records);
std::vector<InstanceRecord> read_records(const std::filesystem::path& path);

struct ResultRow {
  std::string solver;
  Objective objective = Objective::MinMax;
  std::size_t n = 0;
  int m = 1;
  double beta = 0.0;
  double mean_length = 0.0;
  double mean_rej_pct = 0.0;
  double mean_cost = 0.0;
  double mean_time_s = 0.0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

/// All records must share solver, objective, n, m and beta.
ResultRow aggregate(const std::vector<InstanceRecord>& records, std::uint64_t seed);

std::string csv_header();
std::string to_csv(const ResultRow& row);
ResultRow row_from_csv(const std::string& line);
void write_summary(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_summary(const std::filesystem::path& path);

/// Throws std::runtime_error naming the first field that differs from the
/// recomputed aggregate.
void audit(const ResultRow& row, const std::vector<InstanceRecord>& records);

/// Reads `records` and, when a summary.csv sits in the same directory, checks
/// its row for this solver against the records.
std::vector<InstanceRecord> load_audited(const std::filesystem::path& records);

struct Comparison {
  std::vector<std::string> solvers;
  /// cost[i][s] for instance i and solver s.
  std::vector<std::vector<double>> cost;
  std::vector<double> best;
  /// (cost - best) / best, or cost - best when best is zero.
  std::vector<std::vector<double>> gap;
};

/// Joins record sets on instance index; every set must cover the same indices.
Comparison compare(const std::vector<std::vector<InstanceRecord>>& sets);

}  // namespace mtsp::records
