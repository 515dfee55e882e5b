#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mtsp/oracle.hpp"
#include "mtsp/records.hpp"

using namespace mtsp;
using namespace mtsp::records;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mtsp_records_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<InstanceRecord> oracle_records(const std::string& solver, std::size_t count) {
  std::vector<InstanceRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Instance inst = generate_instance(5, 2, 100.0, 10 + i);
    SolutionReport r = oracle::solve_exact(inst);
    r.wall_time = 0.001 * static_cast<double>(i + 1);
    out.push_back(make_record(r, inst, solver, Objective::MinMax, i));
  }
  return out;
}

}  // namespace

TEST_CASE("records keep the worst vehicle under min-max") {
  const Instance inst = generate_instance(6, 2, 100.0, 3);
  const SolutionReport r = oracle::solve_exact(inst);
  const InstanceRecord mm = make_record(r, inst, "oracle", Objective::MinMax, 4);
  CHECK(mm.cost == r.minmax_cost);
  CHECK(mm.length == r.worst_plan().length);
  CHECK(mm.index == 4);
  CHECK(mm.instance_seed == 3);
  const InstanceRecord ov = make_record(r, inst, "oracle", Objective::Overall, 4);
  CHECK(ov.cost == r.overall_cost);
  CHECK(ov.length == r.overall_length);
  CHECK(ov.rej_rate == r.overall_rej);
}

TEST_CASE("record files round trip") {
  const auto dir = fresh_dir("roundtrip");
  const auto recs = oracle_records("oracle", 4);
  write_records(dir / "oracle.ndjson", recs);
  const auto back = read_records(dir / "oracle.ndjson");
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(to_json(back[i]) == to_json(recs[i]));
    CHECK(back[i].plans.size() == 2);
  }

  {
    std::ofstream out(dir / "oracle.ndjson", std::ios::app);
    out << "{\"solver\": \"x\"}\n";
  }
  try {
    read_records(dir / "oracle.ndjson");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("oracle.ndjson:5") != std::string::npos);
  }
}

TEST_CASE("records with broken coverage are rejected") {
  auto rec = oracle_records("oracle", 1).front();
  auto j = to_json(rec);
  j["plans"][0]["served"].push_back(j["plans"][1]["served"][0]);
  CHECK_THROWS_AS(record_from_json(j), ContractError);
}

TEST_CASE("aggregate against a hand computation") {
  std::vector<InstanceRecord> recs(2);
  for (auto& r : recs) {
    r.solver = "s";
    r.n = 10;
    r.m = 2;
    r.beta = 100.0;
  }
  recs[0].length = 3.0;
  recs[0].rej_rate = 0.1;
  recs[0].cost = 13.0;
  recs[0].wall_time = 1.0;
  recs[1].length = 4.0;
  recs[1].rej_rate = 0.0;
  recs[1].cost = 4.0;
  recs[1].wall_time = 3.0;
  const ResultRow row = aggregate(recs, 7);
  CHECK(row.mean_length == 3.5);
  CHECK(row.mean_rej_pct == doctest::Approx(5.0));
  CHECK(row.mean_cost == 8.5);
  CHECK(row.mean_time_s == 2.0);
  CHECK(row.count == 2);
  CHECK(row.seed == 7);
  CHECK(to_csv(row) == "s,minmax,10,2,100,3.5,5.00,8.5,2,2,7");
  recs[1].m = 3;
  CHECK_THROWS_AS(aggregate(recs, 0), ContractError);
  CHECK_THROWS_AS(aggregate({}, 0), ContractError);
}

TEST_CASE("summary csv round trip and audit") {
  const auto dir = fresh_dir("summary");
  const auto recs = oracle_records("oracle", 5);
  write_records(dir / "oracle.ndjson", recs);
  const ResultRow row = aggregate(recs, 0);
  write_summary(dir / "summary.csv", {row});
  const auto rows = read_summary(dir / "summary.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_cost == row.mean_cost);
  CHECK(rows[0].mean_length == row.mean_length);
  CHECK(rows[0].count == 5);
  CHECK_NOTHROW(audit(rows[0], recs));
  CHECK(load_audited(dir / "oracle.ndjson").size() == 5);

  ResultRow tampered = row;
  tampered.mean_cost += 0.01;
  write_summary(dir / "summary.csv", {tampered});
  CHECK_THROWS_WITH(load_audited(dir / "oracle.ndjson"), doctest::Contains("mean_cost"));
  tampered = row;
  tampered.count = 4;
  CHECK_THROWS_WITH(audit(tampered, recs), doctest::Contains("count"));

  {
    std::ofstream bad(dir / "summary.csv");
    bad << "solver,cost\n";
  }
  CHECK_THROWS(read_summary(dir / "summary.csv"));
  CHECK_THROWS(row_from_csv("a,b,c"));
}

TEST_CASE("compare joins on instance index") {
  auto a = oracle_records("oracle", 3);
  auto b = oracle_records("other", 3);
  for (auto& r : b) r.cost *= 1.5;
  std::swap(b[0], b[2]);
  const Comparison c = compare({a, b});
  CHECK(c.solvers == std::vector<std::string>{"oracle", "other"});
  REQUIRE(c.cost.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(c.best[i] == a[i].cost);
    CHECK(c.gap[i][0] == 0.0);
    CHECK(c.gap[i][1] == doctest::Approx(0.5));
  }
  b.pop_back();
  CHECK_THROWS_AS(compare({a, b}), ContractError);
  CHECK_THROWS_AS(compare({}), ContractError);
}
