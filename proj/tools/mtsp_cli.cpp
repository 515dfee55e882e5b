#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtsp/domain.hpp"
#include "mtsp/grad_check.hpp"
#include "mtsp/instance_io.hpp"
#include "mtsp/kmeans.hpp"
#include "mtsp/manager.hpp"
#include "mtsp/metaheuristics.hpp"
#include "mtsp/oracle.hpp"
#include "mtsp/records.hpp"
#include "mtsp/worker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtsp;

namespace {

/// Applies `--a.b value` and `--a.b=value` overrides to `cfg`. Every key
/// must already exist in `cfg`; values are read as JSON when they parse and
/// as strings otherwise.
void apply_overrides(json& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw std::runtime_error("unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    std::string value;
    if (auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw std::runtime_error("flag --" + arg + " needs a value");
      value = extras[++i];
    }
    std::string pointer = "/" + arg;
    for (char& c : pointer)
      if (c == '.') c = '/';
    const json::json_pointer ptr(pointer);
    if (!cfg.contains(ptr)) throw std::runtime_error("unknown flag --" + arg);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded() || (cfg[ptr].is_string() && !parsed.is_string())) parsed = value;
    cfg[ptr] = parsed;
  }
}

void check_known(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) throw std::runtime_error(where + "expected an object");
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) throw std::runtime_error(where + "unknown field " + key);
    if (known.at(key).is_object()) check_known(value, known.at(key), where + key + ".");
  }
}

json load_config(json defaults, const std::string& path, const std::vector<std::string>& extras) {
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
    check_known(file, defaults, path + ": ");
    defaults.merge_patch(file);
  }
  apply_overrides(defaults, extras);
  return defaults;
}

std::string require_path(const json& cfg, const std::string& key) {
  const std::string v = cfg.at(key).get<std::string>();
  if (v.empty()) throw std::runtime_error("missing required setting --" + key);
  return v;
}

void require_file(const std::string& p) {
  if (!fs::exists(p)) throw std::runtime_error("file not found: " + p);
}

worker::WorkerLibrary load_workers(const json& paths) {
  worker::WorkerLibrary lib;
  for (const auto& p : paths) {
    require_file(p.get<std::string>());
    lib.load(p.get<std::string>());
  }
  if (lib.empty()) throw std::runtime_error("no worker checkpoints given (--workers)");
  return lib;
}

std::vector<Instance> load_dataset(const json& cfg) {
  const std::string path = require_path(cfg, "dataset");
  require_file(path);
  return read_dataset(path);
}

/// Writes `<dir>/<solver>.ndjson` and replaces this solver's row in
/// `<dir>/summary.csv`.
void emit(const fs::path& dir, const std::string& solver, Objective obj, std::uint64_t seed,
          const std::vector<records::InstanceRecord>& recs) {
  fs::create_directories(dir);
  records::write_records(dir / (solver + ".ndjson"), recs);
  const records::ResultRow row = records::aggregate(recs, seed);
  std::vector<records::ResultRow> rows;
  const fs::path summary = dir / "summary.csv";
  if (fs::exists(summary)) {
    for (auto& r : records::read_summary(summary))
      if (!(r.solver == solver && r.objective == obj)) rows.push_back(r);
  }
  rows.push_back(row);
  records::write_summary(summary, rows);
  std::cout << records::csv_header() << '\n' << records::to_csv(row) << '\n';
}

int cmd_gen(const json& cfg) {
  const std::string out = require_path(cfg, "out");
  std::mt19937_64 rng(cfg.at("seed").get<std::uint64_t>());
  std::vector<Instance> insts;
  for (int i = 0; i < cfg.at("count").get<int>(); ++i) {
    insts.push_back(generate_instance(cfg.at("n").get<int>(), cfg.at("m").get<int>(), cfg.at("beta").get<double>(),
                                      rng()));
  }
  write_dataset(out, insts);
  std::cout << "wrote " << insts.size() << " instances to " << out << '\n';
  return 0;
}

int cmd_train_worker(const json& cfg) {
  const worker::WorkerConfig wc = worker::worker_config_from_json(cfg.at("train"));
  const std::string out = require_path(cfg, "out");
  std::ofstream curve(require_path(cfg, "curve"));
  curve << "iteration,mean_cost,mean_length,mean_rej,baseline_cost,baseline_updated\n";
  auto res = worker::train_worker(wc, [&](const worker::WorkerCurvePoint& p) {
    curve << p.iteration << ',' << p.mean_cost << ',' << p.mean_length << ',' << p.mean_rej << ',' << p.baseline_cost
          << ',' << (p.baseline_updated ? 1 : 0) << '\n';
    if (p.iteration % 100 == 0) {
      std::cout << "iter " << p.iteration << " cost " << p.mean_cost << " baseline " << p.baseline_cost << std::endl;
    }
  });
  res.model.save(out);
  std::cout << "baseline updates " << res.baseline_updates << ", saved " << out << '\n';
  return 0;
}

int cmd_train_manager(const json& cfg) {
  const manager::ManagerConfig mc = manager::manager_config_from_json(cfg.at("train"));
  const std::string wpath = require_path(cfg, "worker");
  require_file(wpath);
  const auto w = worker::WorkerModel::load(wpath);
  const std::string out = require_path(cfg, "out");
  std::ofstream curve(require_path(cfg, "curve"));
  curve << "iteration,mean_cost,mean_length,mean_rej,baseline_cost,val_cost\n";
  auto res = manager::train_manager(mc, w, [&](const manager::ManagerCurvePoint& p) {
    curve << p.iteration << ',' << p.mean_cost << ',' << p.mean_length << ',' << p.mean_rej << ',' << p.baseline_cost
          << ',';
    if (!std::isnan(p.val_cost)) {
      curve << p.val_cost;
      std::cout << "iter " << p.iteration << " sampled " << p.mean_cost << " validation " << p.val_cost << std::endl;
    }
    curve << '\n';
  });
  res.model.save(out);
  std::cout << "validation " << res.initial_val_cost << " -> " << res.best_val_cost << ", saved " << out << '\n';
  return 0;
}

int cmd_solve(const json& cfg) {
  const auto insts = load_dataset(cfg);
  const std::string mpath = require_path(cfg, "manager");
  require_file(mpath);
  const auto mgr = manager::ManagerModel::load(mpath);
  const auto lib = load_workers(cfg.at("workers"));
  const Objective obj = parse_objective(cfg.at("objective").get<std::string>());
  const std::string solver = cfg.at("solver_name").get<std::string>();
  std::vector<records::InstanceRecord> recs;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    recs.push_back(records::make_record(manager::solve(insts[i], mgr, lib), insts[i], solver, obj, i));
  }
  emit(require_path(cfg, "out_dir"), solver, obj, 0, recs);
  return 0;
}

int cmd_baseline(const json& cfg) {
  const auto insts = load_dataset(cfg);
  const std::string method = cfg.at("method").get<std::string>();
  baselines::MetaConfig meta = baselines::meta_config_from_json(cfg.at("meta"));
  meta.objective = parse_objective(cfg.at("objective").get<std::string>());
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  worker::WorkerLibrary lib;
  if (method == "kmeans" || method == "random") lib = load_workers(cfg.at("workers"));
  else if (method != "sa" && method != "ts" && method != "ba")
    throw std::runtime_error("unknown baseline method '" + method + "' (expected sa|ts|ba|kmeans|random)");

  std::vector<records::InstanceRecord> recs;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const Instance& inst = insts[i];
    const std::uint64_t s = seed + i;
    const auto t0 = std::chrono::steady_clock::now();
    SolutionReport r;
    if (method == "sa") r = baselines::sa_solve(inst, meta, s).report;
    else if (method == "ts") r = baselines::ts_solve(inst, meta, s).report;
    else if (method == "ba") r = baselines::ba_solve(inst, meta, s).report;
    else if (method == "kmeans") r = baselines::kmeans_solve(inst, lib, cfg.at("kmeans_max_iter").get<int>(), s);
    else r = baselines::random_solve(inst, lib.select(inst.n(), inst.m), s);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    recs.push_back(records::make_record(r, inst, method, meta.objective, i));
  }
  emit(require_path(cfg, "out_dir"), method, meta.objective, seed, recs);
  return 0;
}

int cmd_oracle(const json& cfg) {
  const auto insts = load_dataset(cfg);
  oracle::OracleLimits lim;
  lim.max_n = cfg.at("limits").at("max_n").get<int>();
  lim.max_per_vehicle = cfg.at("limits").at("max_per_vehicle").get<int>();
  const Objective obj = Objective::MinMax;
  std::vector<records::InstanceRecord> recs;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    SolutionReport r = oracle::solve_exact(insts[i], lim);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    recs.push_back(records::make_record(r, insts[i], "oracle", obj, i));
  }
  emit(require_path(cfg, "out_dir"), "oracle", obj, 0, recs);
  return 0;
}

int cmd_compare(const json& cfg) {
  std::vector<std::vector<records::InstanceRecord>> sets;
  for (const auto& p : cfg.at("records")) {
    require_file(p.get<std::string>());
    sets.push_back(records::load_audited(p.get<std::string>()));
  }
  const auto cmp = records::compare(sets);
  const std::string out = require_path(cfg, "out");
  std::ofstream table(out);
  table << "index";
  for (const auto& s : cmp.solvers) table << ',' << s << "_cost";
  table << ",best";
  for (const auto& s : cmp.solvers) table << ',' << s << "_gap";
  table << '\n';
  table.precision(17);
  for (std::size_t i = 0; i < cmp.cost.size(); ++i) {
    table << i;
    for (double c : cmp.cost[i]) table << ',' << c;
    table << ',' << cmp.best[i];
    for (double g : cmp.gap[i]) table << ',' << g;
    table << '\n';
  }
  const std::string series = cfg.at("series_dir").get<std::string>();
  if (!series.empty()) fs::create_directories(series);
  std::cout << "solver,mean_cost,mean_gap,min_gap,max_gap\n";
  for (std::size_t s = 0; s < cmp.solvers.size(); ++s) {
    double mc = 0.0, mg = 0.0, lo = INFINITY, hi = -INFINITY;
    std::ofstream dat;
    if (!series.empty()) dat.open(fs::path(series) / (cmp.solvers[s] + "_gap.dat"));
    for (std::size_t i = 0; i < cmp.cost.size(); ++i) {
      mc += cmp.cost[i][s];
      mg += cmp.gap[i][s];
      lo = std::min(lo, cmp.gap[i][s]);
      hi = std::max(hi, cmp.gap[i][s]);
      if (dat) dat << i << ' ' << cmp.gap[i][s] << '\n';
    }
    const double k = static_cast<double>(cmp.cost.size());
    std::cout << cmp.solvers[s] << ',' << mc / k << ',' << mg / k << ',' << lo << ',' << hi << '\n';
  }
  return 0;
}

int cmd_gradcheck(const json& cfg) {
  const auto cases = ad::run_gradcheck_suite(cfg.at("seed").get<std::uint64_t>(), cfg.at("rounds").get<int>());
  bool ok = true;
  std::printf("%-32s %14s %14s %10s %s\n", "case", "max_rel_err", "max_abs_err", "tolerance", "status");
  for (const auto& c : cases) {
    std::printf("%-32s %14.3e %14.3e %10.0e %s\n", c.name.c_str(), c.report.max_rel_error, c.report.max_abs_error,
                c.tolerance, c.report.passed ? "ok" : "FAIL");
    ok = ok && c.report.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver laboratory for multi-vehicle TSP with time windows and rejections"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    json defaults;
    int (*run)(const json&);
  };
  std::vector<Command> commands{
      {"gen", "Generate a dataset of random instances",
       {{"n", 50}, {"m", 10}, {"beta", 100.0}, {"count", 100}, {"seed", 1}, {"out", ""}}, cmd_gen},
      {"train-worker", "Train a single-vehicle routing policy",
       {{"train", worker::to_json(worker::WorkerConfig{})}, {"out", "worker.json"}, {"curve", "worker_curve.csv"}},
       cmd_train_worker},
      {"train-manager", "Train the assignment policy against a frozen worker",
       {{"train", manager::to_json(manager::ManagerConfig{})},
        {"worker", ""},
        {"out", "manager.json"},
        {"curve", "manager_curve.csv"}},
       cmd_train_manager},
      {"solve", "Solve a dataset with manager and worker checkpoints",
       {{"dataset", ""},
        {"manager", ""},
        {"workers", json::array()},
        {"objective", "minmax"},
        {"solver_name", "manager"},
        {"out_dir", "results"}},
       cmd_solve},
      {"baseline", "Solve a dataset with a classical baseline",
       {{"dataset", ""},
        {"method", "sa"},
        {"objective", "minmax"},
        {"seed", 1},
        {"meta", baselines::to_json(baselines::MetaConfig{})},
        {"kmeans_max_iter", 1000},
        {"workers", json::array()},
        {"out_dir", "results"}},
       cmd_baseline},
      {"oracle", "Solve tiny instances exactly",
       {{"dataset", ""}, {"limits", {{"max_n", 8}, {"max_per_vehicle", 6}}}, {"out_dir", "results"}}, cmd_oracle},
      {"compare", "Join record files and report per-instance gaps to the best",
       {{"records", json::array()}, {"out", "compare.csv"}, {"series_dir", ""}}, cmd_compare},
      {"gradcheck", "Finite-difference check of every differentiable operator",
       {{"seed", 1}, {"rounds", 3}}, cmd_gradcheck},
  };

  std::vector<std::string> config_paths(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    sub->add_option("--config", config_paths[i], "JSON config file; any field may also be set as --dotted.name");
    sub->allow_extras();
    sub->footer("Settings (defaults):\n" + commands[i].defaults.dump(2));
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const json cfg = load_config(commands[i].defaults, config_paths[i], subs[i]->remaining());
      return commands[i].run(cfg);
    } catch (const std::exception& e) {
      std::cerr << "mtsp " << commands[i].name << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}
