#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "mtsp/instance_io.hpp"
#include "mtsp/records.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "mtsp_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code = 0;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = workdir() / "last.log";
  const std::string cmd = std::string(MTSP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("gen is reproducible") {
  REQUIRE(run("gen --n 6 --m 2 --count 4 --seed 5 --out " + at("a.ndjson")).code == 0);
  REQUIRE(run("gen --n 6 --m 2 --count 4 --seed 5 --out=" + at("b.ndjson")).code == 0);
  CHECK(slurp(at("a.ndjson")) == slurp(at("b.ndjson")));
  const auto insts = mtsp::read_dataset(at("a.ndjson"));
  REQUIRE(insts.size() == 4);
  CHECK(insts[0].n() == 6);
  CHECK(insts[0].m == 2);
}

TEST_CASE("unknown flags and missing files are named") {
  Run r = run("gen --n 6 --colour blue --out " + at("x.ndjson"));
  CHECK(r.code == 2);
  CHECK(r.out.find("unknown flag --colour") != std::string::npos);

  r = run("oracle --dataset " + at("missing.ndjson"));
  CHECK(r.code == 2);
  CHECK(r.out.find("missing.ndjson") != std::string::npos);

  {
    std::ofstream cfg(at("bad.json"));
    cfg << R"({"meta": {"sa": {"temperature": 3}}})";
  }
  r = run("baseline --config " + at("bad.json") + " --dataset " + at("a.ndjson"));
  CHECK(r.code == 2);
  CHECK(r.out.find("temperature") != std::string::npos);

  r = run("baseline --dataset " + at("a.ndjson") + " --method simplex --out_dir " + at("res"));
  CHECK(r.code == 2);
  CHECK(r.out.find("simplex") != std::string::npos);
}

TEST_CASE("oracle, baselines and compare") {
  const std::string res = at("res");
  REQUIRE(run("oracle --dataset " + at("a.ndjson") + " --out_dir " + res).code == 0);
  {
    std::ofstream cfg(at("sa.json"));
    cfg << R"({"method": "sa", "meta": {"iterations": 20, "sa": {"population": 5}}})";
  }
  REQUIRE(run("baseline --config " + at("sa.json") + " --dataset " + at("a.ndjson") + " --out_dir " + res).code == 0);
  REQUIRE(run("baseline --method ts --meta.iterations 20 --dataset " + at("a.ndjson") + " --out_dir " + res).code == 0);

  const auto rows = mtsp::records::read_summary(fs::path(res) / "summary.csv");
  CHECK(rows.size() == 3);
  const auto oracle = mtsp::records::load_audited(fs::path(res) / "oracle.ndjson");
  const auto sa = mtsp::records::load_audited(fs::path(res) / "sa.ndjson");
  REQUIRE(oracle.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(sa[i].cost >= oracle[i].cost - 1e-9);

  const Run cmp = run("compare --records '[\"" + res + "/oracle.ndjson\", \"" + res + "/sa.ndjson\"]' --out " +
                      at("cmp.csv") + " --series_dir " + at("series"));
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("oracle,") != std::string::npos);
  CHECK(slurp(at("cmp.csv")).rfind("index,oracle_cost,sa_cost,best,oracle_gap,sa_gap\n", 0) == 0);
  CHECK(fs::exists(fs::path(at("series")) / "sa_gap.dat"));

  // A tampered summary fails the audit when the records are loaded.
  auto rows2 = mtsp::records::read_summary(fs::path(res) / "summary.csv");
  for (auto& r : rows2)
    if (r.solver == "sa") r.mean_cost += 1.0;
  mtsp::records::write_summary(fs::path(res) / "summary.csv", rows2);
  const Run bad = run("compare --records '[\"" + res + "/sa.ndjson\"]' --out " + at("cmp2.csv"));
  CHECK(bad.code == 2);
  CHECK(bad.out.find("mean_cost") != std::string::npos);
}

TEST_CASE("train, solve and gradcheck end to end") {
  const std::string arch = R"("arch": {"layers": 1, "heads": 2, "embed": 8, "ff": 16, "pretrain_size": 3})";
  {
    std::ofstream cfg(at("worker.json.cfg"));
    cfg << "{\"train\": {" << arch << R"(, "batch_size": 4, "instances_per_epoch": 8}})";
  }
  REQUIRE(run("train-worker --config " + at("worker.json.cfg") + " --out " + at("w3.json") + " --curve " +
              at("wcurve.csv"))
              .code == 0);
  CHECK(slurp(at("wcurve.csv")).rfind("iteration,", 0) == 0);

  REQUIRE(run("train-manager --train.n 6 --train.arch.m 2 --train.iterations 2 --train.batch_size 4 "
              "--train.val_size 3 --train.val_interval 1 --worker " +
              at("w3.json") + " --out " + at("mgr.json") + " --curve " + at("mcurve.csv"))
              .code == 0);

  const Run solved = run("solve --dataset " + at("a.ndjson") + " --manager " + at("mgr.json") + " --workers '[\"" +
                         at("w3.json") + "\"]' --out_dir " + at("res2"));
  REQUIRE(solved.code == 0);
  const auto recs = mtsp::records::load_audited(fs::path(at("res2")) / "manager.ndjson");
  CHECK(recs.size() == 4);

  const Run missing = run("solve --dataset " + at("a.ndjson") + " --manager " + at("mgr.json") + " --out_dir " +
                          at("res3"));
  CHECK(missing.code == 2);

  const Run kmeans = run("baseline --method kmeans --dataset " + at("a.ndjson") + " --workers '[\"" + at("w3.json") +
                         "\"]' --out_dir " + at("res2"));
  CHECK(kmeans.code == 0);

  const Run gc = run("gradcheck --rounds 1");
  CHECK(gc.code == 0);
  CHECK(gc.out.find("batchnorm(train)") != std::string::npos);
}
