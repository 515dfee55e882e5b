#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/domain.hpp"
#include "mtsp/params.hpp"

namespace mtsp::worker {

struct WorkerArch {
  int layers = 3;
  int heads = 8;
  int embed = 128;
  int ff = 512;
  int pretrain_size = 5;
  bool clip_logits = false;
  double clip = 10.0;

  int key_dim() const noexcept { return embed / heads; }
  void validate() const;
};

nlohmann::json to_json(const WorkerArch& a);
WorkerArch worker_arch_from_json(const nlohmann::json& j);

enum class DecodeMode { Sample, Greedy };

/// Node embeddings for a batch of single-vehicle instances that all have the
/// same customer count. Row `item * group` is the depot, the next `group-1`
/// rows are that item's customers in id order.
struct Encoding {
  ad::Tensor nodes;  // (items * group, embed)
  ad::Tensor mean;   // (items, embed)
  std::size_t items = 0;
  std::size_t group = 0;
};

struct Decoding {
  std::vector<std::vector<int>> tours;  // local customer ids per item
  ad::Tensor logprob;                   // (items, 1)
  /// Per step, the (items, group) log-probabilities; filled on request.
  std::vector<ad::Tensor> step_logprobs;
};

/// Self-attention encoder-decoder policy for the single-vehicle problem.
class WorkerModel {
 public:
  WorkerModel(WorkerArch arch, std::uint64_t seed);
  WorkerModel(const WorkerModel&) = delete;
  WorkerModel& operator=(const WorkerModel&) = delete;
  WorkerModel(WorkerModel&&) = default;
  WorkerModel& operator=(WorkerModel&&) = default;

  const WorkerArch& arch() const noexcept { return arch_; }
  ad::ParamSet& params() noexcept { return params_; }
  const ad::ParamSet& params() const noexcept { return params_; }

  /// Deep copy with independent tensors.
  WorkerModel clone() const;
  void copy_from(const WorkerModel& other) { params_.copy_values_from(other.params_); }

  /// Raw node features (x, y, s, t) with the depot first as (x, y, 0, close).
  static ad::Tensor features(std::span<const Instance* const> subs);

  /// Every instance in `subs` must have the same customer count.
  Encoding encode(std::span<const Instance* const> subs, bool training) const;

  /// `rng` may be null for greedy decoding.
  Decoding decode(const Encoding& enc, DecodeMode mode, std::mt19937_64* rng, bool keep_steps = false) const;

  void save(const std::filesystem::path& path) const;
  static WorkerModel load(const std::filesystem::path& path);

 private:
  struct Layer {
    ad::Tensor wq, wk, wv, wo, ff0, bff0, ff1, bff1, gamma, beta;
    mutable ad::BatchNormState bn;
  };

  void build(std::mt19937_64& rng);

  WorkerArch arch_;
  ad::ParamSet params_;
  ad::Tensor wx_, bx_;
  std::vector<Layer> layers_;
  ad::Tensor wqd_, vf_, vl_;
};

struct Rollout {
  SubTourPlan plan;
  double logprob = 0.0;
};

/// Decode then backtrack, in eval mode without recording a graph. Plans use
/// the sub-instance's local ids.
Rollout rollout(const WorkerModel& model, const Instance& sub, DecodeMode mode, std::mt19937_64* rng = nullptr);

/// Eval-mode rollouts of many sub-instances; instances are bucketed by size
/// so each bucket is one batched forward pass. Output order matches input.
std::vector<Rollout> rollout_many(const WorkerModel& model, std::span<const Instance> subs, DecodeMode mode,
                                  std::mt19937_64* rng = nullptr);

class MissingCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worker checkpoints keyed by pretrain size.
class WorkerLibrary {
 public:
  void add(WorkerModel model);
  void load(const std::filesystem::path& path);
  /// The worker pretrained on ceil(n/m) customers.
  const WorkerModel& select(std::size_t n, int m) const;
  bool empty() const noexcept { return models_.empty(); }

 private:
  std::map<int, WorkerModel> models_;
};

int pretrain_size_for(std::size_t n, int m);

// ---------------------------------------------------------------------------
// Training

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorkerConfig {
  WorkerArch arch;
  int batch_size = 128;
  int epochs = 1;
  int instances_per_epoch = 128 * 100;
  double alpha = 0.01;
  double lr = 1e-4;
  double beta = 100.0;
  std::uint64_t seed = 1;

  int updates() const noexcept { return epochs * (instances_per_epoch / batch_size); }
  void validate() const;
};

nlohmann::json to_json(const WorkerConfig& c);
WorkerConfig worker_config_from_json(const nlohmann::json& j, WorkerConfig base = {});

struct WorkerCurvePoint {
  int iteration = 0;
  double mean_cost = 0.0;
  double mean_length = 0.0;
  double mean_rej = 0.0;
  double baseline_cost = 0.0;
  bool baseline_updated = false;
};

struct WorkerTrainResult {
  WorkerModel model;  // the baseline parameters at the end of training
  std::vector<WorkerCurvePoint> curve;
  int baseline_updates = 0;
};

using WorkerProgress = std::function<void(const WorkerCurvePoint&)>;

/// REINFORCE with a greedy rollout baseline. Each update draws a fresh batch
/// of `arch.pretrain_size`-customer instances; the baseline copy is refreshed
/// when the batch-mean sampled cost beats the baseline's by more than alpha.
WorkerTrainResult train_worker(const WorkerConfig& cfg, const WorkerProgress& progress = {});

/// Surrogate loss mean_i (J_i - J_BL_i) * logP_i with the costs held fixed.
ad::Tensor policy_gradient_loss(const ad::Tensor& logprob, std::span<const double> cost,
                                std::span<const double> baseline);

}  // namespace mtsp::worker
