#include "mtsp/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mtsp::records {

InstanceRecord make_record(const SolutionReport& report, const Instance& inst, const std::string& solver,
                           Objective objective, std::size_t index) {
  InstanceRecord r;
  r.solver = solver;
  r.objective = objective;
  r.index = index;
  r.instance_seed = inst.seed;
  r.n = inst.n();
  r.m = inst.m;
  r.beta = inst.beta;
  r.cost = report.cost(objective);
  r.minmax_cost = report.minmax_cost;
  r.overall_cost = report.overall_cost;
  if (objective == Objective::MinMax) {
    r.length = report.worst_plan().length;
    r.rej_rate = report.worst_plan().rej_rate;
  } else {
    r.length = report.overall_length;
    r.rej_rate = report.overall_rej;
  }
  r.wall_time = report.wall_time;
  r.plans = report.plans;
  return r;
}

nlohmann::json to_json(const InstanceRecord& r) {
  nlohmann::json plans = nlohmann::json::array();
  for (const SubTourPlan& p : r.plans) {
    plans.push_back({{"vehicle", p.vehicle},
                     {"served", p.served},
                     {"rejected", p.rejected},
                     {"service_times", p.service_times},
                     {"length", p.length},
                     {"return_time", p.return_time},
                     {"rej_rate", p.rej_rate},
                     {"hybrid_cost", p.hybrid_cost}});
  }
  return {{"solver", r.solver},       {"objective", to_string(r.objective)},
          {"index", r.index},         {"instance_seed", r.instance_seed},
          {"n", r.n},                 {"m", r.m},
          {"beta", r.beta},           {"cost", r.cost},
          {"minmax_cost", r.minmax_cost}, {"overall_cost", r.overall_cost},
          {"length", r.length},       {"rej_rate", r.rej_rate},
          {"wall_time", r.wall_time}, {"plans", plans}};
}

InstanceRecord record_from_json(const nlohmann::json& j) {
  InstanceRecord r;
  r.solver = j.at("solver").get<std::string>();
  r.objective = parse_objective(j.at("objective").get<std::string>());
  r.index = j.at("index").get<std::size_t>();
  r.instance_seed = j.at("instance_seed").get<std::uint64_t>();
  r.n = j.at("n").get<std::size_t>();
  r.m = j.at("m").get<int>();
  r.beta = j.at("beta").get<double>();
  r.cost = j.at("cost").get<double>();
  r.minmax_cost = j.at("minmax_cost").get<double>();
  r.overall_cost = j.at("overall_cost").get<double>();
  r.length = j.at("length").get<double>();
  r.rej_rate = j.at("rej_rate").get<double>();
  r.wall_time = j.at("wall_time").get<double>();
  for (const auto& p : j.at("plans")) {
    SubTourPlan plan;
    plan.vehicle = p.at("vehicle").get<int>();
    plan.served = p.at("served").get<std::vector<int>>();
    plan.rejected = p.at("rejected").get<std::vector<int>>();
    plan.service_times = p.at("service_times").get<std::vector<double>>();
    plan.length = p.at("length").get<double>();
    plan.return_time = p.at("return_time").get<double>();
    plan.rej_rate = p.at("rej_rate").get<double>();
    plan.hybrid_cost = p.at("hybrid_cost").get<double>();
    r.plans.push_back(std::move(plan));
  }
  if (!r.plans.empty()) check_coverage(r.plans, r.n);
  return r;
}

void write_records(const std::filesystem::path& path, const std::vector<InstanceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<InstanceRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<InstanceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ResultRow aggregate(const std::vector<InstanceRecord>& records, std::uint64_t seed) {
  if (records.empty()) throw ContractError("aggregate: no records");
  const InstanceRecord& f = records.front();
  ResultRow row;
  row.solver = f.solver;
  row.objective = f.objective;
  row.n = f.n;
  row.m = f.m;
  row.beta = f.beta;
  row.seed = seed;
  row.count = records.size();
  for (const auto& r : records) {
    if (r.solver != f.solver || r.objective != f.objective || r.n != f.n || r.m != f.m || r.beta != f.beta) {
      throw ContractError("aggregate: record " + std::to_string(r.index) + " belongs to a different experiment");
    }
    row.mean_length += r.length;
    row.mean_rej_pct += 100.0 * r.rej_rate;
    row.mean_cost += r.cost;
    row.mean_time_s += r.wall_time;
  }
  const double inv = 1.0 / static_cast<double>(records.size());
  row.mean_length *= inv;
  row.mean_rej_pct *= inv;
  row.mean_cost *= inv;
  row.mean_time_s *= inv;
  return row;
}

std::string csv_header() { return "solver,objective,n,m,beta,mean_length,mean_rej_pct,mean_cost,mean_time_s,count,seed"; }

namespace {

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string two(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string to_csv(const ResultRow& r) {
  std::ostringstream os;
  os << r.solver << ',' << to_string(r.objective) << ',' << r.n << ',' << r.m << ',' << full(r.beta) << ','
     << full(r.mean_length) << ',' << two(r.mean_rej_pct) << ',' << full(r.mean_cost) << ','
     << full(r.mean_time_s) << ',' << r.count << ',' << r.seed;
  return os.str();
}

ResultRow row_from_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 11) throw std::runtime_error("summary row needs 11 fields, got " + std::to_string(f.size()));
  ResultRow r;
  r.solver = f[0];
  r.objective = parse_objective(f[1]);
  r.n = std::stoul(f[2]);
  r.m = std::stoi(f[3]);
  r.beta = std::stod(f[4]);
  r.mean_length = std::stod(f[5]);
  r.mean_rej_pct = std::stod(f[6]);
  r.mean_cost = std::stod(f[7]);
  r.mean_time_s = std::stod(f[8]);
  r.count = std::stoul(f[9]);
  r.seed = std::stoull(f[10]);
  return r;
}

void write_summary(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << csv_header() << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

std::vector<ResultRow> read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(row_from_csv(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void audit(const ResultRow& row, const std::vector<InstanceRecord>& records) {
  const ResultRow re = aggregate(records, row.seed);
  auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  auto fail = [&](const std::string& field) {
    throw std::runtime_error("summary row for " + row.solver + " disagrees with its records in " + field);
  };
  if (re.solver != row.solver || re.objective != row.objective || re.n != row.n || re.m != row.m) fail("experiment");
  if (re.count != row.count) fail("count");
  if (!close(re.beta, row.beta, 1e-12)) fail("beta");
  if (!close(re.mean_length, row.mean_length, 1e-12)) fail("mean_length");
  if (std::abs(re.mean_rej_pct - row.mean_rej_pct) > 0.005 + 1e-9) fail("mean_rej_pct");
  if (!close(re.mean_cost, row.mean_cost, 1e-12)) fail("mean_cost");
  if (!close(re.mean_time_s, row.mean_time_s, 1e-12)) fail("mean_time_s");
}

std::vector<InstanceRecord> load_audited(const std::filesystem::path& path) {
  auto recs = read_records(path);
  const auto summary = path.parent_path() / "summary.csv";
  if (!recs.empty() && std::filesystem::exists(summary)) {
    for (const ResultRow& row : read_summary(summary)) {
      if (row.solver == recs.front().solver && row.objective == recs.front().objective) audit(row, recs);
    }
  }
  return recs;
}

Comparison compare(const std::vector<std::vector<InstanceRecord>>& sets) {
  if (sets.empty()) throw ContractError("compare: no record sets");
  Comparison c;
  const std::size_t count = sets.front().size();
  std::vector<std::map<std::size_t, double>> by_index(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].empty()) throw ContractError("compare: empty record set");
    c.solvers.push_back(sets[s].front().solver);
    for (const auto& r : sets[s]) by_index[s][r.index] = r.cost;
    if (by_index[s].size() != count || sets[s].size() != count) {
      throw ContractError("compare: " + c.solvers.back() + " covers a different set of instances");
    }
  }
  for (const auto& [index, _] : by_index.front()) {
    std::vector<double> row;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      auto it = by_index[s].find(index);
      if (it == by_index[s].end()) {
        throw ContractError("compare: " + c.solvers[s] + " has no record for instance " + std::to_string(index));
      }
      row.push_back(it->second);
    }
    const double best = *std::min_element(row.begin(), row.end());
    std::vector<double> gap;
    for (double v : row) gap.push_back(best > 0.0 ? (v - best) / best : v - best);
    c.cost.push_back(std::move(row));
    c.best.push_back(best);
    c.gap.push_back(std::move(gap));
  }
  return c;
}

}  // namespace mtsp::records
