#include "mtsp/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mtsp::ad {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (contains(name)) throw ContractError("duplicate parameter name " + name);
  t.set_requires_grad(true);
  entries_.push_back({name, std::move(t), true});
  return entries_.back().tensor;
}

Tensor& ParamSet::add_buffer(const std::string& name, Tensor t) {
  if (contains(name)) throw ContractError("duplicate parameter name " + name);
  t.set_requires_grad(false);
  entries_.push_back({name, std::move(t), false});
  return entries_.back().tensor;
}

void ParamSet::add_batchnorm(const std::string& prefix, BatchNormState& bn) {
  add_buffer(prefix + ".running_mean", bn.running_mean);
  add_buffer(prefix + ".running_var", bn.running_var);
}

Tensor& ParamSet::get(const std::string& name) {
  for (Entry& e : entries_)
    if (e.name == name) return e.tensor;
  throw ContractError("no parameter named " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return e.tensor;
  throw ContractError("no parameter named " + name);
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

void ParamSet::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

void ParamSet::copy_values_from(const ParamSet& other) {
  if (other.size() != size()) throw ContractError("copy_values_from: parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& src = other.entries_[i];
    Entry& dst = entries_[i];
    if (src.name != dst.name || src.tensor.size() != dst.tensor.size()) {
      throw ContractError("copy_values_from: mismatch at " + dst.name);
    }
    std::copy(src.tensor.data().begin(), src.tensor.data().end(), dst.tensor.mutable_data().begin());
  }
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_)
    if (e.trainable) n += e.tensor.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const Entry& e : entries_)
    for (double v : e.tensor.data())
      if (!std::isfinite(v)) return false;
  return true;
}

nlohmann::json ParamSet::tensors_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const Entry& e : entries_) {
    out[e.name] = {{"shape", {e.tensor.rows(), e.tensor.cols()}},
                   {"data", std::vector<double>(e.tensor.data().begin(), e.tensor.data().end())}};
  }
  return out;
}

void ParamSet::load_tensors_json(const nlohmann::json& tensors) {
  for (Entry& e : entries_) {
    auto it = tensors.find(e.name);
    if (it == tensors.end()) throw ContractError("checkpoint lacks tensor " + e.name);
    const auto shape = it->at("shape").get<std::vector<std::size_t>>();
    const auto data = it->at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != e.tensor.rows() || shape[1] != e.tensor.cols() ||
        data.size() != e.tensor.size()) {
      throw ContractError("checkpoint tensor " + e.name + " has shape incompatible with " + e.tensor.shape_str());
    }
    std::copy(data.begin(), data.end(), e.tensor.mutable_data().begin());
  }
}

Tensor init_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = u(rng);
  return Tensor::from(fan_in, fan_out, std::move(v));
}

Tensor init_uniform_bias(std::size_t fan_in, std::size_t width, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(width);
  for (double& x : v) x = u(rng);
  return Tensor::from(1, width, std::move(v));
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& arch, const ParamSet& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << nlohmann::json{{"arch", arch}, {"tensors", params.tensors_json()}}.dump();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.contains("arch") || !doc.contains("tensors")) {
    throw std::runtime_error("checkpoint " + path.string() + " lacks arch/tensors");
  }
  return {doc["arch"], doc["tensors"]};
}

}  // namespace mtsp::ad
