#include "mtsp/worker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtsp/ops.hpp"

namespace mtsp::worker {

using ad::Tensor;

void WorkerArch::validate() const {
  if (layers < 1 || heads < 1 || embed < 1 || ff < 1) throw ContractError("worker arch: dimensions must be positive");
  if (embed % heads != 0) {
    throw ContractError("worker arch: embed " + std::to_string(embed) + " not divisible by heads " +
                        std::to_string(heads));
  }
  if (pretrain_size < 1) throw ContractError("worker arch: pretrain_size must be >= 1");
}

nlohmann::json to_json(const WorkerArch& a) {
  return {{"kind", "worker"},     {"layers", a.layers},           {"heads", a.heads},
          {"embed", a.embed},     {"ff", a.ff},                   {"pretrain_size", a.pretrain_size},
          {"clip_logits", a.clip_logits}, {"clip", a.clip}};
}

WorkerArch worker_arch_from_json(const nlohmann::json& j) {
  WorkerArch a;
  a.layers = j.value("layers", a.layers);
  a.heads = j.value("heads", a.heads);
  a.embed = j.value("embed", a.embed);
  a.ff = j.value("ff", a.ff);
  a.pretrain_size = j.value("pretrain_size", a.pretrain_size);
  a.clip_logits = j.value("clip_logits", a.clip_logits);
  a.clip = j.value("clip", a.clip);
  a.validate();
  return a;
}

WorkerModel::WorkerModel(WorkerArch arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  std::mt19937_64 rng(seed);
  build(rng);
}

void WorkerModel::build(std::mt19937_64& rng) {
  const auto D = static_cast<std::size_t>(arch_.embed);
  const auto F = static_cast<std::size_t>(arch_.ff);
  wx_ = params_.add("W_x", ad::init_uniform(4, D, rng));
  bx_ = params_.add("b_x", ad::init_uniform_bias(4, D, rng));
  layers_.resize(static_cast<std::size_t>(arch_.layers));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string s = "_" + std::to_string(l + 1);
    Layer& L = layers_[l];
    L.wq = params_.add("W_Q" + s, ad::init_uniform(D, D, rng));
    L.wk = params_.add("W_K" + s, ad::init_uniform(D, D, rng));
    L.wv = params_.add("W_V" + s, ad::init_uniform(D, D, rng));
    L.wo = params_.add("W_O" + s, ad::init_uniform(D, D, rng));
    L.ff0 = params_.add("W_ff0" + s, ad::init_uniform(D, F, rng));
    L.bff0 = params_.add("b_ff0" + s, ad::init_uniform_bias(D, F, rng));
    L.ff1 = params_.add("W_ff1" + s, ad::init_uniform(F, D, rng));
    L.bff1 = params_.add("b_ff1" + s, ad::init_uniform_bias(F, D, rng));
    L.gamma = params_.add("bn_gamma" + s, Tensor::full(1, D, 1.0));
    L.beta = params_.add("bn_beta" + s, Tensor::zeros(1, D));
    L.bn = ad::BatchNormState::make(D);
    params_.add_batchnorm("bn" + s, L.bn);
  }
  wqd_ = params_.add("W_Qd", ad::init_uniform(3 * D, D, rng));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(D), l(D);
  for (double& x : f) x = u(rng);
  for (double& x : l) x = u(rng);
  vf_ = params_.add("v_f", Tensor::from(1, D, std::move(f)));
  vl_ = params_.add("v_l", Tensor::from(1, D, std::move(l)));
}

WorkerModel WorkerModel::clone() const {
  WorkerModel copy(arch_, 0);
  copy.params_.copy_values_from(params_);
  return copy;
}

Tensor WorkerModel::features(std::span<const Instance* const> subs) {
  if (subs.empty()) throw ContractError("worker: empty batch");
  const std::size_t group = subs.front()->n() + 1;
  std::vector<double> x;
  x.reserve(subs.size() * group * 4);
  for (const Instance* s : subs) {
    if (s->n() + 1 != group) throw ContractError("worker: batched instances must share a customer count");
    x.insert(x.end(), {s->depot.x, s->depot.y, 0.0, s->depot.close});
    for (const Customer& c : s->customers) x.insert(x.end(), {c.x, c.y, c.s, c.t});
  }
  return Tensor::from(subs.size() * group, 4, std::move(x));
}

Encoding WorkerModel::encode(std::span<const Instance* const> subs, bool training) const {
  using namespace ad;
  Encoding enc;
  enc.items = subs.size();
  enc.group = subs.front()->n() + 1;
  Tensor h = add(matmul(features(subs), wx_), bx_);
  for (const Layer& L : layers_) {
    const Tensor att = group_attention(matmul(h, L.wq), matmul(h, L.wk), matmul(h, L.wv), enc.group,
                                       static_cast<std::size_t>(arch_.heads), true);
    const Tensor mha = matmul(att, L.wo);
    const Tensor ffn = add(matmul(relu(add(matmul(h, L.ff0), L.bff0)), L.ff1), L.bff1);
    h = batchnorm(add(mha, ffn), L.gamma, L.beta, L.bn, training);
  }
  enc.mean = segment_mean(h, enc.group);
  enc.nodes = h;
  return enc;
}

Decoding WorkerModel::decode(const Encoding& enc, DecodeMode mode, std::mt19937_64* rng, bool keep_steps) const {
  using namespace ad;
  if (mode == DecodeMode::Sample && rng == nullptr) throw ContractError("worker decode: sampling needs an rng");
  const std::size_t items = enc.items, group = enc.group, steps = group - 1;
  const double inf = std::numeric_limits<double>::infinity();
  const double scale_qk = 1.0 / std::sqrt(static_cast<double>(arch_.key_dim()));

  Decoding out;
  out.tours.assign(items, {});
  if (steps == 0) {
    out.logprob = Tensor::zeros(items, 1);
    return out;
  }

  std::vector<double> mask(items * group, 0.0);
  for (std::size_t i = 0; i < items; ++i) mask[i * group] = -inf;  // depot is never decoded

  const std::vector<std::size_t> zeros(items, 0);
  Tensor first = gather_rows(vf_, zeros);
  Tensor last = gather_rows(vl_, zeros);
  Tensor logprob;
  std::vector<std::size_t> chosen(items), rows(items);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor q = matmul(concat({enc.mean, first, last}, 1), wqd_);
    Tensor u = group_scores(q, enc.nodes, group, scale_qk);
    if (arch_.clip_logits) u = scale(tanh(u), arch_.clip);
    const Tensor logp = log_softmax(add(u, Tensor::from(items, group, mask)), 1);
    const auto lp = logp.data();
    for (std::size_t i = 0; i < items; ++i) {
      const double* row = &lp[i * group];
      std::size_t pick_j = 0;
      if (mode == DecodeMode::Greedy) {
        double best = -inf;
        for (std::size_t j = 1; j < group; ++j) {
          if (mask[i * group + j] == 0.0 && (row[j] > best || pick_j == 0)) {
            best = row[j];
            pick_j = j;
          }
        }
      } else {
        const double r = unit(*rng);
        double acc = 0.0;
        for (std::size_t j = 1; j < group; ++j) {
          if (mask[i * group + j] != 0.0) continue;
          pick_j = j;  // last unmasked node absorbs rounding
          acc += std::exp(row[j]);
          if (r < acc) break;
        }
      }
      chosen[i] = pick_j;
      rows[i] = i * group + pick_j;
      mask[i * group + pick_j] = -inf;
      out.tours[i].push_back(static_cast<int>(pick_j) - 1);
    }
    const Tensor step_lp = pick(logp, chosen);
    logprob = logprob.defined() ? add(logprob, step_lp) : step_lp;
    if (keep_steps) out.step_logprobs.push_back(logp.detach());
    last = gather_rows(enc.nodes, rows);
    if (t == 0) first = last;
  }
  out.logprob = logprob;
  return out;
}

void WorkerModel::save(const std::filesystem::path& path) const { ad::save_checkpoint(path, to_json(arch_), params_); }

WorkerModel WorkerModel::load(const std::filesystem::path& path) {
  const ad::Checkpoint ck = ad::load_checkpoint(path);
  if (ck.arch.value("kind", std::string("worker")) != "worker") {
    throw std::runtime_error(path.string() + " is not a worker checkpoint");
  }
  WorkerModel model(worker_arch_from_json(ck.arch), 0);
  model.params_.load_tensors_json(ck.tensors);
  return model;
}

Rollout rollout(const WorkerModel& model, const Instance& sub, DecodeMode mode, std::mt19937_64* rng) {
  auto many = rollout_many(model, std::span<const Instance>(&sub, 1), mode, rng);
  return std::move(many.front());
}

std::vector<Rollout> rollout_many(const WorkerModel& model, std::span<const Instance> subs, DecodeMode mode,
                                  std::mt19937_64* rng) {
  ad::NoGradGuard no_grad;
  std::vector<Rollout> out(subs.size());
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i].n() == 0) {
      out[i].plan = backtrack({}, subs[i]);
    } else {
      buckets[subs[i].n()].push_back(i);
    }
  }
  for (const auto& [size, idx] : buckets) {
    std::vector<const Instance*> batch;
    batch.reserve(idx.size());
    for (std::size_t i : idx) batch.push_back(&subs[i]);
    const Encoding enc = model.encode(batch, false);
    const Decoding dec = model.decode(enc, mode, rng);
    const auto lp = dec.logprob.data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out[idx[k]].plan = backtrack(dec.tours[k], subs[idx[k]]);
      out[idx[k]].logprob = lp[k];
    }
  }
  return out;
}

int pretrain_size_for(std::size_t n, int m) {
  if (m < 1) throw ContractError("pretrain_size_for: m must be >= 1");
  return static_cast<int>((n + static_cast<std::size_t>(m) - 1) / static_cast<std::size_t>(m));
}

void WorkerLibrary::add(WorkerModel model) {
  const int size = model.arch().pretrain_size;
  models_.insert_or_assign(size, std::move(model));
}

void WorkerLibrary::load(const std::filesystem::path& path) { add(WorkerModel::load(path)); }

const WorkerModel& WorkerLibrary::select(std::size_t n, int m) const {
  const int need = pretrain_size_for(n, m);
  auto it = models_.find(need);
  if (it == models_.end()) {
    std::string have;
    for (const auto& [k, _] : models_) have += (have.empty() ? "" : ", ") + std::to_string(k);
    throw MissingCheckpoint("no worker checkpoint with pretrain size " + std::to_string(need) + " (n=" +
                            std::to_string(n) + ", m=" + std::to_string(m) + "); available: [" + have + "]");
  }
  return it->second;
}

}  // namespace mtsp::worker
