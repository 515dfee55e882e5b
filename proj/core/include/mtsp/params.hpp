#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtsp/ops.hpp"

namespace mtsp::ad {

/// Named tensors of one model: trainable parameters plus non-trainable
/// buffers such as batch-norm running statistics. Insertion order is kept.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  Tensor& add(const std::string& name, Tensor t);
  Tensor& add_buffer(const std::string& name, Tensor t);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  /// Registers running_mean/var of `bn` as buffers `<prefix>.running_mean`
  /// and `<prefix>.running_var`.
  void add_batchnorm(const std::string& prefix, BatchNormState& bn);

  void zero_grad();
  /// Overwrites values (not grads) from a set with identical names and shapes.
  void copy_values_from(const ParamSet& other);
  std::size_t parameter_count() const;
  bool all_finite() const;

  nlohmann::json tensors_json() const;
  /// Loads values by name; every entry must be present with a matching shape.
  void load_tensors_json(const nlohmann::json& tensors);

 private:
  std::vector<Entry> entries_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, shape (fan_in, fan_out).
Tensor init_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
Tensor init_uniform_bias(std::size_t fan_in, std::size_t width, std::mt19937_64& rng);

struct Checkpoint {
  nlohmann::json arch;
  nlohmann::json tensors;
};

/// `{"arch": {...}, "tensors": {"name": {"shape": [r, c], "data": [...]}}}`
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& arch, const ParamSet& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mtsp::ad
