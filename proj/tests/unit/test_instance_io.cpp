#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mtsp/instance_io.hpp"

using namespace mtsp;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mtsp_io_" + name);
}

}  // namespace

TEST_CASE("instance round trip is lossless") {
  const Instance a = generate_instance(17, 3, 12.5, 4242);
  const Instance b = parse_instance(write_instance(a));
  CHECK(b.m == a.m);
  CHECK(b.beta == a.beta);
  CHECK(b.seed == a.seed);
  REQUIRE(b.n() == a.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    CHECK(b.customers[i].x == a.customers[i].x);
    CHECK(b.customers[i].y == a.customers[i].y);
    CHECK(b.customers[i].s == a.customers[i].s);
    CHECK(b.customers[i].t == a.customers[i].t);
  }
  CHECK(write_instance(b) == write_instance(a));
}

TEST_CASE("customers may arrive out of id order") {
  auto doc = to_json(generate_instance(3, 1, 1.0, 0));
  std::swap(doc["customers"][0], doc["customers"][2]);
  const Instance inst = instance_from_json(doc);
  for (int i = 0; i < 3; ++i) CHECK(inst.customers[static_cast<std::size_t>(i)].id == i);
}

TEST_CASE("malformed instances name the problem") {
  const auto good = to_json(generate_instance(3, 1, 1.0, 0));

  auto doc = good;
  doc["customers"][1]["t"] = -1.0;
  CHECK_THROWS_WITH_AS(instance_from_json(doc), "window inverted at id 1", ParseError);

  doc = good;
  doc.erase("depot");
  CHECK_THROWS_WITH_AS(instance_from_json(doc), "instance: missing depot", ParseError);

  doc = good;
  doc["customers"][2]["id"] = 0;
  CHECK_THROWS_WITH_AS(instance_from_json(doc), "duplicate id 0", ParseError);

  doc = good;
  doc["customers"][0].erase("x");
  CHECK_THROWS_AS(instance_from_json(doc), ParseError);

  doc = good;
  doc["n"] = 4;
  CHECK_THROWS_AS(instance_from_json(doc), ParseError);

  doc = good;
  doc["m"] = 0;
  CHECK_THROWS_AS(instance_from_json(doc), ParseError);

  CHECK_THROWS_AS(parse_instance("{not json"), ParseError);
  CHECK_THROWS_AS(parse_instance("[1,2]"), ParseError);
}

TEST_CASE("datasets are newline-delimited") {
  const auto path = temp_path("dataset.ndjson");
  std::vector<Instance> insts;
  for (std::uint64_t s = 0; s < 5; ++s) insts.push_back(generate_instance(4, 2, 100.0, s));
  write_dataset(path, insts);
  const auto back = read_dataset(path);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(write_instance(back[i]) == write_instance(insts[i]));

  {
    std::ofstream out(path, std::ios::app);
    out << "{\"n\": 1}\n";
  }
  try {
    read_dataset(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":6:") != std::string::npos);
  }
  std::filesystem::remove(path);
  CHECK_THROWS(read_dataset(temp_path("missing.ndjson")));
}
