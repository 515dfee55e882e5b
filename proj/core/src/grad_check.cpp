#include "mtsp/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mtsp/ops.hpp"

namespace mtsp::ad {

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h, double tol) {
  Tensor leaf = Tensor::from(x.rows(), x.cols(), std::vector<double>(x.data().begin(), x.data().end()), true);
  Tensor y = f(leaf);
  if (y.size() != 1) throw ContractError("grad_check needs a scalar function, got " + y.shape_str());
  backward(y);
  std::vector<double> analytic(leaf.size(), 0.0);
  if (!leaf.grad().empty()) std::copy(leaf.grad().begin(), leaf.grad().end(), analytic.begin());

  GradCheckReport rep;
  NoGradGuard no_grad;
  auto data = leaf.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + h;
    const double fp = f(leaf).item();
    data[i] = orig - h;
    const double fm = f(leaf).item();
    data[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel = abs_err / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
    }
  }
  rep.passed = rep.max_rel_error < tol;
  return rep;
}

namespace {

Tensor random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(r * c);
  for (double& x : v) x = u(rng);
  return Tensor::from(r, c, std::move(v));
}

/// Values bounded away from zero so relu's kink sits outside the stencil.
Tensor away_from_zero(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(r * c);
  for (double& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return Tensor::from(r, c, std::move(v));
}

/// Projects onto a fixed random direction so every input component carries a
/// sizeable gradient.
Tensor project(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed, int rounds) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(2, 5);
  std::vector<GradCheckCase> cases;
  auto record = [&](const std::string& name, double tol, const std::function<Tensor(const Tensor&)>& f,
                    const Tensor& x) {
    GradCheckCase c{name, tol, grad_check(f, x, 1e-5, tol)};
    auto it = std::find_if(cases.begin(), cases.end(), [&](const GradCheckCase& e) { return e.name == name; });
    if (it == cases.end()) {
      cases.push_back(c);
    } else {
      it->report.max_rel_error = std::max(it->report.max_rel_error, c.report.max_rel_error);
      it->report.max_abs_error = std::max(it->report.max_abs_error, c.report.max_abs_error);
      it->report.passed = it->report.passed && c.report.passed;
    }
  };

  for (int round = 0; round < rounds; ++round) {
    const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);
    const Tensor a = random_tensor(rng, r, c);
    const Tensor b = random_tensor(rng, c, k);
    const Tensor same = random_tensor(rng, r, c);
    const Tensor bias = random_tensor(rng, 1, c);
    const Tensor w_rc = random_tensor(rng, r, c);
    const Tensor w_rk = random_tensor(rng, r, k);
    const Tensor w_cr = random_tensor(rng, c, r);
    const Tensor w_r1 = random_tensor(rng, r, 1);
    const Tensor w_1c = random_tensor(rng, 1, c);
    const Tensor s = Tensor::scalar(0.7);

    record("matmul(lhs)", 1e-4, [&](const Tensor& x) { return project(matmul(x, b), w_rk); }, a);
    record("matmul(rhs)", 1e-4, [&](const Tensor& x) { return project(matmul(a, x), w_rk); }, b);
    record("add", 1e-4, [&](const Tensor& x) { return project(add(x, same), w_rc); }, a);
    record("add(row bias)", 1e-4, [&](const Tensor& x) { return project(add(a, x), w_rc); }, bias);
    record("sub", 1e-4, [&](const Tensor& x) { return project(sub(same, x), w_rc); }, a);
    record("scale", 1e-4, [&](const Tensor& x) { return project(scale(x, -1.7), w_rc); }, a);
    record("mul", 1e-4, [&](const Tensor& x) { return project(mul(x, same), w_rc); }, a);
    record("mul(scalar)", 1e-4, [&](const Tensor& x) { return project(mul(a, x), w_rc); }, s);
    record("concat(axis0)", 1e-4,
           [&](const Tensor& x) { return project(concat({x, same}, 0), concat({w_rc, w_rc}, 0)); }, a);
    record("concat(axis1)", 1e-4,
           [&](const Tensor& x) { return project(concat({same, x}, 1), concat({w_rc, w_rc}, 1)); }, a);
    record("sum(axis0)", 1e-4, [&](const Tensor& x) { return project(sum(x, 0), w_1c); }, a);
    record("sum(axis1)", 1e-4, [&](const Tensor& x) { return project(sum(x, 1), w_r1); }, a);
    record("mean(axis0)", 1e-4, [&](const Tensor& x) { return project(mean(x, 0), w_1c); }, a);
    record("max(axis1)", 1e-4, [&](const Tensor& x) { return project(max(x, 1), w_r1); }, a);
    record("exp", 1e-4, [&](const Tensor& x) { return project(exp(x), w_rc); }, a);
    record("log", 1e-4, [&](const Tensor& x) { return project(log(x), w_rc); }, random_tensor(rng, r, c, 0.5, 2.0));
    record("tanh", 1e-4, [&](const Tensor& x) { return project(tanh(x), w_rc); }, a);
    record("relu", 1e-4, [&](const Tensor& x) { return project(relu(x), w_rc); }, away_from_zero(rng, r, c));
    record("softmax(axis1)", 1e-4, [&](const Tensor& x) { return project(softmax(x, 1), w_rc); }, a);
    record("softmax(axis0)", 1e-4, [&](const Tensor& x) { return project(softmax(x, 0), w_rc); }, a);
    record("log_softmax", 1e-4, [&](const Tensor& x) { return project(log_softmax(x, 1), w_rc); }, a);
    record("transpose", 1e-4, [&](const Tensor& x) { return project(transpose(x), w_cr); }, a);
    record("reshape", 1e-4, [&](const Tensor& x) { return project(reshape(x, c, r), w_cr); }, a);
    {
      std::vector<std::size_t> rows{0, r - 1, 0};
      const Tensor w = random_tensor(rng, rows.size(), c);
      record("gather_rows", 1e-4, [&, rows](const Tensor& x) { return project(gather_rows(x, rows), w); }, a);
    }
    {
      std::vector<std::size_t> cols(r);
      for (std::size_t i = 0; i < r; ++i) cols[i] = i % c;
      record("pick", 1e-4, [&, cols](const Tensor& x) { return project(pick(x, cols), w_r1); }, a);
    }
    {
      // cross-entropy composite: -mean log softmax at targets
      std::vector<std::size_t> target(r);
      for (std::size_t i = 0; i < r; ++i) target[i] = (i * 7 + 1) % c;
      record("softmax-cross-entropy", 1e-4,
             [target](const Tensor& x) { return scale(mean(pick(log_softmax(x, 1), target)), -1.0); }, a);
    }
    {
      const std::size_t rows = r + 3;
      const Tensor x0 = random_tensor(rng, rows, c);
      const Tensor w = random_tensor(rng, rows, c);
      const Tensor gamma = random_tensor(rng, 1, c, 0.5, 1.5);
      const Tensor beta = random_tensor(rng, 1, c);
      auto state = BatchNormState::make(c);
      record("batchnorm(train)", 1e-3,
             [&](const Tensor& x) { return project(batchnorm(x, gamma, beta, state, true), w); }, x0);
      record("batchnorm(train, gamma)", 1e-3,
             [&](const Tensor& g) { return project(batchnorm(x0, g, beta, state, true), w); }, gamma);
      record("batchnorm(eval)", 1e-4,
             [&](const Tensor& x) { return project(batchnorm(x, gamma, beta, state, false), w); }, x0);
    }
    {
      const std::size_t group = dim(rng), items = 2, heads = 2, d = 4;
      const Tensor q = random_tensor(rng, items * group, d);
      const Tensor kk = random_tensor(rng, items * group, d);
      const Tensor v = random_tensor(rng, items * group, d);
      const Tensor w = random_tensor(rng, items * group, d);
      for (bool excl : {false, true}) {
        const std::string tag = excl ? "group_attention(no-self" : "group_attention(";
        record(tag + ",q)", 1e-4,
               [&](const Tensor& x) { return project(group_attention(x, kk, v, group, heads, excl), w); }, q);
        record(tag + ",k)", 1e-4,
               [&](const Tensor& x) { return project(group_attention(q, x, v, group, heads, excl), w); }, kk);
        record(tag + ",v)", 1e-4,
               [&](const Tensor& x) { return project(group_attention(q, kk, x, group, heads, excl), w); }, v);
      }
      const Tensor qi = random_tensor(rng, items, d);
      const Tensor ws = random_tensor(rng, items, group);
      record("group_scores(q)", 1e-4, [&](const Tensor& x) { return project(group_scores(x, kk, group, 0.5), ws); },
             qi);
      record("group_scores(k)", 1e-4, [&](const Tensor& x) { return project(group_scores(qi, x, group, 0.5), ws); },
             kk);
      const Tensor wi = random_tensor(rng, items, d);
      record("group_weighted_sum(w)", 1e-4,
             [&](const Tensor& x) { return project(group_weighted_sum(x, v, group), wi); }, ws);
      record("group_weighted_sum(v)", 1e-4,
             [&](const Tensor& x) { return project(group_weighted_sum(ws, x, group), wi); }, v);
      record("segment_sum", 1e-4, [&](const Tensor& x) { return project(segment_sum(x, group), wi); }, v);
      record("expand_rows", 1e-4, [&](const Tensor& x) { return project(expand_rows(x, group), w); }, qi);
    }
    {
      // a small three-layer perceptron end to end
      const std::size_t in = c, hid = k;
      const Tensor x0 = random_tensor(rng, r, in);
      const Tensor w1 = random_tensor(rng, in, hid), w2 = random_tensor(rng, hid, hid), w3 = random_tensor(rng, hid, 1);
      const Tensor b1 = random_tensor(rng, 1, hid);
      auto mlp = [&](const Tensor& a1, const Tensor& a2) {
        return sum(tanh(matmul(relu(matmul(tanh(add(matmul(x0, a1), b1)), a2)), w3)));
      };
      record("mlp(w1)", 1e-4, [&](const Tensor& x) { return mlp(x, w2); }, w1);
      record("mlp(w2)", 1e-4, [&](const Tensor& x) { return mlp(w1, x); }, w2);
    }
  }
  return cases;
}

}  // namespace mtsp::ad
