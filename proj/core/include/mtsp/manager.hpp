#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/domain.hpp"
#include "mtsp/params.hpp"
#include "mtsp/worker.hpp"

namespace mtsp::manager {

enum class Variant { Gin, Mlp };
enum class VehicleHeads { Multi, Single };

struct ManagerArch {
  int layers = 3;
  int raw_dim = 4;
  int gin_dim = 32;      // n_G
  int vehicle_dim = 64;  // n
  int assign_dim = 64;   // n'
  int m = 1;
  Variant variant = Variant::Gin;
  VehicleHeads heads = VehicleHeads::Multi;
  bool freeze_eps = false;

  void validate() const;
};

nlohmann::json to_json(const ManagerArch& a);
ManagerArch manager_arch_from_json(const nlohmann::json& j);
Variant parse_variant(const std::string& s);
VehicleHeads parse_heads(const std::string& s);

/// Batched graph embedding. Each item is one instance with `group` nodes,
/// depot first.
struct GraphEmbedding {
  ad::Tensor nodes;      // (items * group, n_G), h_v summed over layers
  ad::Tensor graph;      // (items, n_G)
  ad::Tensor depot;      // (items, n_G)
  ad::Tensor customers;  // (items * (group-1), n_G)
  std::size_t items = 0;
  std::size_t group = 0;
  std::size_t customers_per_item() const noexcept { return group - 1; }
};

enum class AssignMode { Sample, Greedy };

/// Customer-to-vehicle assignment policy: GIN graph embedding, per-vehicle
/// attention heads, and a single-head assignment layer.
class ManagerModel {
 public:
  ManagerModel(ManagerArch arch, std::uint64_t seed);
  ManagerModel(const ManagerModel&) = delete;
  ManagerModel& operator=(const ManagerModel&) = delete;
  ManagerModel(ManagerModel&&) = default;
  ManagerModel& operator=(ManagerModel&&) = default;

  const ManagerArch& arch() const noexcept { return arch_; }
  ad::ParamSet& params() noexcept { return params_; }
  const ad::ParamSet& params() const noexcept { return params_; }
  ManagerModel clone() const;
  void copy_from(const ManagerModel& other) { params_.copy_values_from(other.params_); }

  /// All instances must share n.
  GraphEmbedding embed_graph(std::span<const Instance* const> insts, bool training) const;
  /// One (items, n) tensor per vehicle.
  std::vector<ad::Tensor> embed_vehicles(const GraphEmbedding& g) const;
  /// Raw compatibilities u' as (items * n_customers, m).
  ad::Tensor assignment_scores(const GraphEmbedding& g, std::span<const ad::Tensor> vehicles) const;
  /// log softmax_b tanh(u'), (items * n_customers, m).
  ad::Tensor log_probs(std::span<const Instance* const> insts, bool training) const;

  void save(const std::filesystem::path& path) const;
  static ManagerModel load(const std::filesystem::path& path);

 private:
  struct Mlp {
    ad::Tensor w1, b1, g1, be1, w2, b2, g2, be2, w3, b3;
    mutable ad::BatchNormState bn1, bn2;
  };
  struct Head {
    ad::Tensor q, k, v;
  };

  void build(std::mt19937_64& rng);
  ad::Tensor mlp_forward(const Mlp& f, const ad::Tensor& x, bool training) const;

  ManagerArch arch_;
  ad::ParamSet params_;
  std::vector<Mlp> mlps_;
  std::vector<ad::Tensor> eps_;
  std::vector<Head> heads_;
  ad::Tensor q_prime_, k_prime_;
};

/// Chooses one vehicle per customer row of `log_probs`; greedy takes the
/// first maximum.
std::vector<int> choose(const ad::Tensor& log_probs, AssignMode mode, std::mt19937_64* rng);

/// Per-item total log-probability of `choice`, (items, 1).
ad::Tensor assignment_logprob(const ad::Tensor& log_probs, std::span<const int> choice, std::size_t per_item);

/// Splits flat per-row choices into per-item assignments with logprobs.
std::vector<Assignment> to_assignments(const ad::Tensor& log_probs, std::span<const int> choice,
                                       std::size_t per_item);

std::vector<Assignment> assign(const ManagerModel& model, std::span<const Instance* const> insts, AssignMode mode,
                               std::mt19937_64* rng = nullptr);

/// Routes each vehicle's customers with the greedy worker and builds the
/// reports. Every sub-instance of every instance goes into one pooled batch.
std::vector<SolutionReport> route_assignments(std::span<const Instance* const> insts,
                                              std::span<const Assignment> assignments,
                                              const worker::WorkerModel& worker);

SolutionReport solve(const Instance& inst, const ManagerModel& model, const worker::WorkerModel& worker);
SolutionReport solve(const Instance& inst, const ManagerModel& model, const worker::WorkerLibrary& workers);

// ---------------------------------------------------------------------------
// Training

struct ManagerConfig {
  ManagerArch arch;
  int n = 20;
  double beta = 100.0;
  Objective objective = Objective::MinMax;
  int iterations = 1500;
  int batch_size = 128;
  int val_size = 100;
  int val_interval = 100;
  double lr = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const ManagerConfig& c);
ManagerConfig manager_config_from_json(const nlohmann::json& j, ManagerConfig base = {});

struct ManagerCurvePoint {
  int iteration = 0;
  double mean_cost = 0.0;  // sampled assignments
  double baseline_cost = 0.0;
  double mean_length = 0.0;
  double mean_rej = 0.0;
  double val_cost = 0.0;  // NaN when not validated at this iteration
};

struct ManagerTrainResult {
  ManagerModel model;  // best-validation parameters
  std::vector<ManagerCurvePoint> curve;
  double initial_val_cost = 0.0;
  double best_val_cost = 0.0;
  int best_iteration = -1;
};

using ManagerProgress = std::function<void(const ManagerCurvePoint&)>;

/// Fixed validation instances for a config (seeded from cfg.seed).
std::vector<Instance> validation_set(const ManagerConfig& cfg);

/// Mean cost of greedy manager + greedy worker on `insts`.
double evaluate_manager(const ManagerModel& model, const worker::WorkerModel& worker, std::span<const Instance> insts,
                        Objective objective, AssignMode mode = AssignMode::Greedy, std::uint64_t seed = 0);

/// Self-critical REINFORCE: the greedy assignment from the same forward pass
/// is the baseline for the sampled one. The worker stays frozen.
ManagerTrainResult train_manager(const ManagerConfig& cfg, const worker::WorkerModel& worker,
                                 const ManagerProgress& progress = {});

}  // namespace mtsp::manager
