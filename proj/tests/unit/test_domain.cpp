#include <doctest.h>

#include <random>
#include <set>

#include "mtsp/domain.hpp"
#include "mtsp/instance_io.hpp"
#include "reference.hpp"

using namespace mtsp;

TEST_CASE("euclid") {
  CHECK(euclid({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(euclid({0, 0}, {1, 1}) == doctest::Approx(1.41421356).epsilon(1e-9));
  CHECK(euclid({0.5, 0.5}, {0.5, 1.0}) == 0.5);
  CHECK(euclid({0.1, 0.7}, {0.9, 0.2}) == euclid({0.9, 0.2}, {0.1, 0.7}));
}

TEST_CASE("generate_instance follows the instance distribution") {
  const Instance inst = generate_instance(50, 10, 100.0, 7);
  CHECK(inst.n() == 50);
  CHECK(inst.m == 10);
  CHECK(inst.depot.x == 0.5);
  CHECK(inst.depot.y == 0.5);
  CHECK(inst.depot.open == 0.0);
  CHECK(inst.depot.close == 10.0);
  for (const Customer& c : inst.customers) {
    CHECK(c.t == c.s + 3.0);
    CHECK(c.s >= 0.0);
    CHECK(c.s <= 3.0);
    CHECK(c.x >= 0.0);
    CHECK(c.x <= 1.0);
  }
  const Instance one = generate_instance(1, 1, 0.0, 0);
  CHECK(one.n() == 1);
  CHECK(one.customers[0].s <= 3.0);

  CHECK(write_instance(generate_instance(20, 3, 100.0, 99)) == write_instance(generate_instance(20, 3, 100.0, 99)));
  CHECK(write_instance(generate_instance(20, 3, 100.0, 99)) != write_instance(generate_instance(20, 3, 100.0, 98)));
}

TEST_CASE("window start statistics over ten thousand customers") {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const Customer& c : generate_instance(100, 1, 100.0, seed).customers) {
      sum += c.s;
      ++count;
      REQUIRE(c.t == c.s + 3.0);
    }
  }
  CHECK(count == 10000);
  CHECK(std::abs(sum / static_cast<double>(count) - 1.5) < 0.05);
}

TEST_CASE("backtrack hand-worked examples") {
  SUBCASE("late customer is rejected and the clock reverts") {
    const Instance inst = ref::make({{0, 0.5, 0.9, 0.0, 3.0}, {0, 0.5, 0.1, 0.0, 0.5}});
    const std::vector<int> tour{0, 1};
    const SubTourPlan p = backtrack(tour, inst);
    CHECK(p.served == std::vector<int>{0});
    CHECK(p.rejected == std::vector<int>{1});
    CHECK(p.service_times[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(p.length == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(p.rej_rate == 0.5);
    CHECK(evaluate_plan(p, 100.0) == doctest::Approx(50.8).epsilon(1e-12));
    CHECK(p.hybrid_cost == doctest::Approx(50.8).epsilon(1e-12));
  }
  SUBCASE("empty tour") {
    const Instance inst = ref::make({{0, 0.2, 0.2, 0.0, 3.0}});
    const SubTourPlan p = backtrack({}, inst);
    CHECK(p.served.empty());
    CHECK(p.rejected.empty());
    CHECK(p.length == 0.0);
    CHECK(p.rej_rate == 0.0);
    CHECK(p.hybrid_cost == 0.0);
  }
  SUBCASE("early arrival waits for the window") {
    const Instance inst = ref::make({{0, 0.5, 1.0, 1.0, 4.0}});
    const std::vector<int> tour{0};
    const SubTourPlan p = backtrack(tour, inst);
    CHECK(p.service_times[0] == 1.0);
    CHECK(p.length == 1.0);
    CHECK(p.return_time == 1.5);
  }
  SUBCASE("arrival exactly at the deadline is served") {
    const Instance inst = ref::make({{0, 0.5, 1.0, 0.0, 0.5}});
    const std::vector<int> tour{0};
    CHECK(backtrack(tour, inst).served.size() == 1);
  }
}

TEST_CASE("evaluate_plan") {
  SubTourPlan p;
  p.length = 3.56;
  CHECK(evaluate_plan(p, 100.0) == doctest::Approx(3.56));
  p.length = 0.0;
  CHECK(evaluate_plan(p, 100.0) == 0.0);
  p.length = 0.8;
  p.rej_rate = 0.5;
  CHECK(evaluate_plan(p, 100.0) == doctest::Approx(50.8));
}

TEST_CASE("backtrack properties on random tours") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const Instance inst = generate_instance(n, 1, 100.0, rng());
    std::vector<int> tour(static_cast<std::size_t>(n));
    std::iota(tour.begin(), tour.end(), 0);
    std::shuffle(tour.begin(), tour.end(), rng);
    const SubTourPlan p = backtrack(tour, inst);
    const ref::Sim r = ref::simulate(inst, tour);

    REQUIRE(p.served == r.served);
    REQUIRE(p.rejected == r.rejected);
    CHECK(std::abs(p.length - ref::route_length(inst, p.served)) < 1e-9);
    CHECK(std::abs(p.hybrid_cost - r.cost) < 1e-9);
    for (std::size_t k = 0; k < p.served.size(); ++k) {
      CHECK(p.service_times[k] <= inst.customers[static_cast<std::size_t>(p.served[k])].t);
      if (k > 0) CHECK(p.service_times[k] >= p.service_times[k - 1]);
    }
    std::set<int> all(p.served.begin(), p.served.end());
    all.insert(p.rejected.begin(), p.rejected.end());
    CHECK(all.size() == static_cast<std::size_t>(n));

    const DistanceMatrix dm(inst);
    const SubTourPlan q = backtrack(tour, inst, dm);
    CHECK(q.length == p.length);
    CHECK(q.served == p.served);

    double prev = -1.0;
    for (double beta : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
      const double j = evaluate_plan(p, beta);
      CHECK(j >= prev);
      prev = j;
    }
  }
}

TEST_CASE("objectives") {
  SubTourPlan a, b;
  a.served = {0};
  a.hybrid_cost = 3.0;
  a.length = 3.0;
  b.served = {1};
  b.vehicle = 1;
  b.hybrid_cost = 5.0;
  b.length = 5.0;
  const std::vector<SubTourPlan> plans{a, b};
  CHECK(objective_minmax(plans, 2) == 5.0);
  CHECK(objective_minmax(std::vector<SubTourPlan>{a}, 1) == 3.0);
  CHECK(objective_overall(plans, 2, 100.0) == 4.0);

  SUBCASE("overall cost averaged over a test set") {
    // 100 instances of 100 customers on 5 vehicles, every route 3.48 long;
    // seven instances reject one customer, a mean rejection rate of 0.07%.
    double mean_cost = 0.0, mean_rej = 0.0;
    for (int k = 0; k < 100; ++k) {
      std::vector<SubTourPlan> fleet(5);
      int next = 0;
      for (std::size_t v = 0; v < 5; ++v) {
        fleet[v].length = 3.48;
        for (int c = 0; c < 20; ++c) fleet[v].served.push_back(next++);
      }
      if (k < 7) {
        fleet[0].served.pop_back();
        fleet[0].rejected.push_back(19);
      }
      mean_cost += objective_overall(fleet, 100, 100.0) / 100.0;
      mean_rej += (k < 7 ? 0.01 : 0.0) / 100.0;
    }
    CHECK(mean_rej == doctest::Approx(0.0007));
    CHECK(mean_cost == doctest::Approx(3.55).epsilon(1e-12));
  }

  SUBCASE("coverage violations") {
    SubTourPlan dup = b;
    dup.served = {0};
    CHECK_THROWS_AS(objective_minmax(std::vector<SubTourPlan>{a, dup}, 2), ContractError);
    CHECK_THROWS_AS(objective_minmax(std::vector<SubTourPlan>{a}, 2), ContractError);
    CHECK_THROWS_AS(objective_overall(std::vector<SubTourPlan>{a}, 2, 1.0), ContractError);
  }
}

TEST_CASE("make_report and assignment evaluation") {
  const Instance inst = generate_instance(9, 3, 100.0, 5);
  Assignment a;
  a.vehicle_of = {0, 1, 2, 0, 1, 2, 0, 1, 1};
  const SolutionReport r = evaluate_assignment_in_order(a, inst);
  REQUIRE(r.plans.size() == 3);
  double worst = 0.0, total_len = 0.0;
  std::size_t rejected = 0;
  for (const auto& p : r.plans) {
    worst = std::max(worst, p.hybrid_cost);
    total_len += p.length;
    rejected += p.rejected.size();
  }
  CHECK(r.minmax_cost == worst);
  CHECK(r.overall_length == doctest::Approx(total_len / 3.0));
  CHECK(r.overall_rej == doctest::Approx(static_cast<double>(rejected) / 9.0));
  CHECK(r.overall_cost == doctest::Approx(total_len / 3.0 + 100.0 * static_cast<double>(rejected) / 9.0));
  CHECK(r.assigned_counts() == std::vector<std::size_t>{3, 4, 2});

  Assignment bad;
  bad.vehicle_of = {0, 3, 0, 0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(bad.validate(9, 3), ContractError);
  bad.vehicle_of = {0};
  CHECK_THROWS_AS(bad.validate(9, 3), ContractError);
}

TEST_CASE("sub-instances renumber customers") {
  const Instance inst = generate_instance(6, 2, 100.0, 1);
  const std::vector<int> ids{4, 1};
  const Instance sub = make_subinstance(inst, ids);
  CHECK(sub.m == 1);
  REQUIRE(sub.n() == 2);
  CHECK(sub.customers[0].id == 0);
  CHECK(sub.customers[0].x == inst.customers[4].x);
  CHECK(sub.customers[1].t == inst.customers[1].t);
}

TEST_CASE("instance validation") {
  Instance inst = generate_instance(3, 1, 100.0, 2);
  CHECK_NOTHROW(inst.validate());
  inst.customers[1].t = inst.customers[1].s - 1.0;
  CHECK_THROWS_WITH_AS(inst.validate(), "window inverted at id 1", ContractError);
  inst = generate_instance(3, 1, 100.0, 2);
  inst.m = 0;
  CHECK_THROWS_AS(inst.validate(), ContractError);
  inst.m = 1;
  inst.beta = -1.0;
  CHECK_THROWS_AS(inst.validate(), ContractError);
  CHECK_THROWS_AS(generate_instance(0, 1, 1.0, 0), ContractError);
}

TEST_CASE("parse_objective") {
  CHECK(parse_objective("minmax") == Objective::MinMax);
  CHECK(parse_objective("overall") == Objective::Overall);
  CHECK_THROWS_AS(parse_objective("max"), ContractError);
}
