#include "mtsp/manager.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mtsp/ops.hpp"

namespace mtsp::manager {

using ad::Tensor;

void ManagerArch::validate() const {
  if (layers < 1) throw ContractError("manager arch: layers must be >= 1");
  if (raw_dim != 4) throw ContractError("manager arch: raw_dim must be 4 (x, y, s, t)");
  if (gin_dim < 1 || vehicle_dim < 1 || assign_dim < 1) throw ContractError("manager arch: dimensions must be positive");
  if (m < 1) throw ContractError("manager arch: m must be >= 1");
}

Variant parse_variant(const std::string& s) {
  if (s == "gin") return Variant::Gin;
  if (s == "mlp") return Variant::Mlp;
  throw ContractError("unknown manager variant '" + s + "' (expected gin or mlp)");
}

VehicleHeads parse_heads(const std::string& s) {
  if (s == "multi") return VehicleHeads::Multi;
  if (s == "single") return VehicleHeads::Single;
  throw ContractError("unknown vehicle_heads '" + s + "' (expected multi or single)");
}

nlohmann::json to_json(const ManagerArch& a) {
  return {{"kind", "manager"},
          {"layers", a.layers},
          {"raw_dim", a.raw_dim},
          {"gin_dim", a.gin_dim},
          {"vehicle_dim", a.vehicle_dim},
          {"assign_dim", a.assign_dim},
          {"m", a.m},
          {"variant", a.variant == Variant::Gin ? "gin" : "mlp"},
          {"vehicle_heads", a.heads == VehicleHeads::Multi ? "multi" : "single"},
          {"freeze_eps", a.freeze_eps}};
}

ManagerArch manager_arch_from_json(const nlohmann::json& j) {
  ManagerArch a;
  a.layers = j.value("layers", a.layers);
  a.raw_dim = j.value("raw_dim", a.raw_dim);
  a.gin_dim = j.value("gin_dim", a.gin_dim);
  a.vehicle_dim = j.value("vehicle_dim", a.vehicle_dim);
  a.assign_dim = j.value("assign_dim", a.assign_dim);
  a.m = j.value("m", a.m);
  a.variant = parse_variant(j.value("variant", std::string("gin")));
  a.heads = parse_heads(j.value("vehicle_heads", std::string("multi")));
  a.freeze_eps = j.value("freeze_eps", a.freeze_eps);
  a.validate();
  return a;
}

ManagerModel::ManagerModel(ManagerArch arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  std::mt19937_64 rng(seed);
  build(rng);
}

void ManagerModel::build(std::mt19937_64& rng) {
  const auto G = static_cast<std::size_t>(arch_.gin_dim);
  const auto N = static_cast<std::size_t>(arch_.vehicle_dim);
  const auto NP = static_cast<std::size_t>(arch_.assign_dim);
  const std::string family = arch_.variant == Variant::Gin ? "gin_" : "mlp_";
  for (int l = 0; l < arch_.layers; ++l) {
    const std::string p = family + std::to_string(l + 1) + ".";
    const std::size_t in = l == 0 ? static_cast<std::size_t>(arch_.raw_dim) : G;
    Mlp f;
    f.w1 = params_.add(p + "W1", ad::init_uniform(in, G, rng));
    f.b1 = params_.add(p + "b1", ad::init_uniform_bias(in, G, rng));
    f.g1 = params_.add(p + "bn1_gamma", Tensor::full(1, G, 1.0));
    f.be1 = params_.add(p + "bn1_beta", Tensor::zeros(1, G));
    f.bn1 = ad::BatchNormState::make(G);
    params_.add_batchnorm(p + "bn1", f.bn1);
    f.w2 = params_.add(p + "W2", ad::init_uniform(G, G, rng));
    f.b2 = params_.add(p + "b2", ad::init_uniform_bias(G, G, rng));
    f.g2 = params_.add(p + "bn2_gamma", Tensor::full(1, G, 1.0));
    f.be2 = params_.add(p + "bn2_beta", Tensor::zeros(1, G));
    f.bn2 = ad::BatchNormState::make(G);
    params_.add_batchnorm(p + "bn2", f.bn2);
    f.w3 = params_.add(p + "W3", ad::init_uniform(G, G, rng));
    f.b3 = params_.add(p + "b3", ad::init_uniform_bias(G, G, rng));
    mlps_.push_back(std::move(f));
    if (arch_.variant == Variant::Gin) {
      const std::string name = "eps_" + std::to_string(l + 1);
      eps_.push_back(arch_.freeze_eps ? params_.add_buffer(name, Tensor::scalar(0.0))
                                      : params_.add(name, Tensor::scalar(0.0)));
    }
  }
  if (arch_.heads == VehicleHeads::Multi) {
    for (int b = 0; b < arch_.m; ++b) {
      const std::string s = "_" + std::to_string(b + 1);
      Head h;
      h.q = params_.add("theta_q" + s, ad::init_uniform(2 * G, N, rng));
      h.k = params_.add("theta_k" + s, ad::init_uniform(G, N, rng));
      h.v = params_.add("theta_v" + s, ad::init_uniform(G, N, rng));
      heads_.push_back(h);
    }
  } else {
    Head h;
    h.q = params_.add("theta_q", ad::init_uniform(2 * G, N, rng));
    h.k = params_.add("theta_k", ad::init_uniform(G, N, rng));
    h.v = params_.add("theta_v", ad::init_uniform(G, N, rng));
    heads_.push_back(h);
  }
  q_prime_ = params_.add("theta_q_prime", ad::init_uniform(N, NP, rng));
  k_prime_ = params_.add("theta_k_prime", ad::init_uniform(G, NP, rng));
}

ManagerModel ManagerModel::clone() const {
  ManagerModel copy(arch_, 0);
  copy.params_.copy_values_from(params_);
  return copy;
}

Tensor ManagerModel::mlp_forward(const Mlp& f, const Tensor& x, bool training) const {
  using namespace ad;
  Tensor h = relu(batchnorm(add(matmul(x, f.w1), f.b1), f.g1, f.be1, f.bn1, training));
  h = relu(batchnorm(add(matmul(h, f.w2), f.b2), f.g2, f.be2, f.bn2, training));
  return add(matmul(h, f.w3), f.b3);
}

GraphEmbedding ManagerModel::embed_graph(std::span<const Instance* const> insts, bool training) const {
  using namespace ad;
  GraphEmbedding g;
  g.items = insts.size();
  g.group = insts.front()->n() + 1;
  for (const Instance* inst : insts) {
    if (inst->m != arch_.m) {
      throw ContractError("manager bound to m=" + std::to_string(arch_.m) + " got instance with m=" +
                          std::to_string(inst->m));
    }
  }
  Tensor h = worker::WorkerModel::features(insts);
  Tensor total;
  const double inv_others = 1.0 / static_cast<double>(g.group - 1);
  for (std::size_t l = 0; l < mlps_.size(); ++l) {
    Tensor z = h;
    if (arch_.variant == Variant::Gin) {
      const Tensor others = scale(sub(expand_rows(segment_sum(h, g.group), g.group), h), inv_others);
      z = add(mul(h, add_scalar(eps_[l], 1.0)), others);
    }
    h = mlp_forward(mlps_[l], z, training);
    total = total.defined() ? add(total, h) : h;
  }
  g.nodes = total;
  g.graph = segment_mean(total, g.group);
  std::vector<std::size_t> depot_rows(g.items), cust_rows;
  cust_rows.reserve(g.items * (g.group - 1));
  for (std::size_t i = 0; i < g.items; ++i) {
    depot_rows[i] = i * g.group;
    for (std::size_t j = 1; j < g.group; ++j) cust_rows.push_back(i * g.group + j);
  }
  g.depot = gather_rows(total, depot_rows);
  g.customers = gather_rows(total, cust_rows);
  return g;
}

std::vector<Tensor> ManagerModel::embed_vehicles(const GraphEmbedding& g) const {
  using namespace ad;
  const Tensor ctx = concat({g.graph, g.depot}, 1);
  const double sc = 1.0 / std::sqrt(static_cast<double>(arch_.vehicle_dim));
  const std::size_t per = g.customers_per_item();
  auto head = [&](const Head& h) {
    const Tensor w = softmax(group_scores(matmul(ctx, h.q), matmul(g.customers, h.k), per, sc), 1);
    return group_weighted_sum(w, matmul(g.customers, h.v), per);
  };
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(arch_.m));
  if (arch_.heads == VehicleHeads::Multi) {
    for (const Head& h : heads_) out.push_back(head(h));
  } else {
    const Tensor shared = head(heads_.front());
    out.assign(static_cast<std::size_t>(arch_.m), shared);
  }
  return out;
}

Tensor ManagerModel::assignment_scores(const GraphEmbedding& g, std::span<const Tensor> vehicles) const {
  using namespace ad;
  const std::size_t per = g.customers_per_item();
  const double sc = 1.0 / std::sqrt(static_cast<double>(arch_.assign_dim));
  const Tensor kp = matmul(g.customers, k_prime_);
  std::vector<Tensor> cols;
  cols.reserve(vehicles.size());
  for (const Tensor& hb : vehicles) {
    cols.push_back(reshape(group_scores(matmul(hb, q_prime_), kp, per, sc), g.items * per, 1));
  }
  return concat(cols, 1);
}

Tensor ManagerModel::log_probs(std::span<const Instance* const> insts, bool training) const {
  const GraphEmbedding g = embed_graph(insts, training);
  const std::vector<Tensor> hb = embed_vehicles(g);
  return ad::log_softmax(ad::tanh(assignment_scores(g, hb)), 1);
}

void ManagerModel::save(const std::filesystem::path& path) const {
  ad::save_checkpoint(path, to_json(arch_), params_);
}

ManagerModel ManagerModel::load(const std::filesystem::path& path) {
  const ad::Checkpoint ck = ad::load_checkpoint(path);
  if (ck.arch.value("kind", std::string()) != "manager") {
    throw std::runtime_error(path.string() + " is not a manager checkpoint");
  }
  ManagerModel model(manager_arch_from_json(ck.arch), 0);
  model.params_.load_tensors_json(ck.tensors);
  return model;
}

std::vector<int> choose(const Tensor& log_probs, AssignMode mode, std::mt19937_64* rng) {
  if (mode == AssignMode::Sample && rng == nullptr) throw ContractError("manager: sampling needs an rng");
  const std::size_t rows = log_probs.rows(), m = log_probs.cols();
  const auto lp = log_probs.data();
  std::vector<int> out(rows);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &lp[r * m];
    std::size_t pick = 0;
    if (mode == AssignMode::Greedy) {
      for (std::size_t b = 1; b < m; ++b)
        if (row[b] > row[pick]) pick = b;
    } else {
      const double u = unit(*rng);
      double acc = 0.0;
      for (pick = 0; pick + 1 < m; ++pick) {
        acc += std::exp(row[pick]);
        if (u < acc) break;
      }
    }
    out[r] = static_cast<int>(pick);
  }
  return out;
}

Tensor assignment_logprob(const Tensor& log_probs, std::span<const int> choice, std::size_t per_item) {
  std::vector<std::size_t> cols(choice.begin(), choice.end());
  return ad::segment_sum(ad::pick(log_probs, cols), per_item);
}

std::vector<Assignment> to_assignments(const Tensor& log_probs, std::span<const int> choice, std::size_t per_item) {
  const std::size_t items = choice.size() / per_item;
  const auto lp = log_probs.data();
  const std::size_t m = log_probs.cols();
  std::vector<Assignment> out(items);
  for (std::size_t i = 0; i < items; ++i) {
    double total = 0.0;
    out[i].vehicle_of.assign(choice.begin() + static_cast<std::ptrdiff_t>(i * per_item),
                             choice.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_item));
    for (std::size_t j = 0; j < per_item; ++j) {
      const std::size_t r = i * per_item + j;
      total += lp[r * m + static_cast<std::size_t>(choice[r])];
    }
    out[i].logprob = total;
  }
  return out;
}

std::vector<Assignment> assign(const ManagerModel& model, std::span<const Instance* const> insts, AssignMode mode,
                               std::mt19937_64* rng) {
  ad::NoGradGuard no_grad;
  const Tensor lp = model.log_probs(insts, false);
  const std::vector<int> choice = choose(lp, mode, rng);
  return to_assignments(lp, choice, insts.front()->n());
}

std::vector<SolutionReport> route_assignments(std::span<const Instance* const> insts,
                                              std::span<const Assignment> assignments,
                                              const worker::WorkerModel& worker) {
  if (insts.size() != assignments.size()) throw ContractError("route_assignments: size mismatch");
  struct Ref {
    std::size_t inst;
    int vehicle;
    std::vector<int> ids;
  };
  std::vector<Instance> subs;
  std::vector<Ref> refs;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    assignments[i].validate(insts[i]->n(), insts[i]->m);
    auto groups = assignments[i].groups(insts[i]->m);
    for (int b = 0; b < insts[i]->m; ++b) {
      auto& ids = groups[static_cast<std::size_t>(b)];
      subs.push_back(make_subinstance(*insts[i], ids));
      refs.push_back({i, b, std::move(ids)});
    }
  }
  const auto rolls = worker::rollout_many(worker, subs, worker::DecodeMode::Greedy);
  std::vector<std::vector<SubTourPlan>> plans(insts.size());
  for (std::size_t k = 0; k < refs.size(); ++k) {
    SubTourPlan p = rolls[k].plan;
    const auto& ids = refs[k].ids;
    p.vehicle = refs[k].vehicle;
    for (int& c : p.served) c = ids[static_cast<std::size_t>(c)];
    for (int& c : p.rejected) c = ids[static_cast<std::size_t>(c)];
    plans[refs[k].inst].push_back(std::move(p));
  }
  std::vector<SolutionReport> out;
  out.reserve(insts.size());
  for (std::size_t i = 0; i < insts.size(); ++i) out.push_back(make_report(std::move(plans[i]), *insts[i]));
  return out;
}

SolutionReport solve(const Instance& inst, const ManagerModel& model, const worker::WorkerModel& worker) {
  inst.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Instance* one = &inst;
  const auto a = assign(model, std::span<const Instance* const>(&one, 1), AssignMode::Greedy);
  auto reports = route_assignments(std::span<const Instance* const>(&one, 1), a, worker);
  reports.front().wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::move(reports.front());
}

SolutionReport solve(const Instance& inst, const ManagerModel& model, const worker::WorkerLibrary& workers) {
  return solve(inst, model, workers.select(inst.n(), inst.m));
}

}  // namespace mtsp::manager
