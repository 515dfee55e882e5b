#include "mtsp/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtsp::ad {

using detail::make_result;
using detail::shape_error;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

CMap cmap(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return CMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
MMap mmap(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

/// Parent `i` of `self` if it wants a gradient, else nullptr.
Node* wants(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

enum class Bcast { Same, Row, Scalar };

Bcast classify(const char* op, const Tensor& a, const Tensor& b, bool allow_row) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Bcast::Same;
  if (b.size() == 1) return Bcast::Scalar;
  if (allow_row && b.rows() == 1 && b.cols() == a.cols()) return Bcast::Row;
  shape_error(op, a, b);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  mmap(out, m, n).noalias() = cmap(a.node()->value, m, k) * cmap(b.node()->value, k, n);
  return make_result(m, n, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const auto g = cmap(self.grad, m, n);
    if (Node* pa = wants(self, 0)) {
      mmap(pa->grad_buffer(), m, k).noalias() += g * cmap(self.parents[1]->value, k, n).transpose();
    }
    if (Node* pb = wants(self, 1)) {
      mmap(pb->grad_buffer(), k, n).noalias() += cmap(self.parents[0]->value, m, k).transpose() * g;
    }
  });
}

namespace {

Tensor add_like(const Tensor& a, const Tensor& b, double sign, const char* op) {
  const Bcast kind = classify(op, a, b, true);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto& bv = b.node()->value;
  switch (kind) {
    case Bcast::Same:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * bv[i];
      break;
    case Bcast::Row:
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += sign * bv[j];
      break;
    case Bcast::Scalar:
      for (double& x : out) x += sign * bv[0];
      break;
  }
  return make_result(r, c, std::move(out), op, {a, b}, [kind, r, c, sign](Node& self) {
    const auto& g = self.grad;
    if (Node* pa = wants(self, 0)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (Node* pb = wants(self, 1)) {
      auto& gb = pb->grad_buffer();
      switch (kind) {
        case Bcast::Same:
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
          break;
        case Bcast::Row:
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += sign * g[i * c + j];
          break;
        case Bcast::Scalar: {
          double s = 0.0;
          for (double x : g) s += x;
          gb[0] += sign * s;
          break;
        }
      }
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.size() == 1 && b.size() != 1) return mul(b, a);
  const Bcast kind = classify("mul", a, b, false);
  const std::size_t r = a.rows(), c = a.cols();
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  if (kind == Bcast::Same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[0];
  }
  return make_result(r, c, std::move(out), "mul", {a, b}, [kind](Node& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (Node* pa = wants(self, 0)) {
      auto& ga = pa->grad_buffer();
      if (kind == Bcast::Same) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[0];
      }
    }
    if (Node* pb = wants(self, 1)) {
      auto& gb = pb->grad_buffer();
      if (kind == Bcast::Same) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * av[i];
        gb[0] += s;
      }
    }
  });
}

Tensor scale(const Tensor& a, double k) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x *= k;
  return make_result(a.rows(), a.cols(), std::move(out), "scale", {a}, [k](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += k * self.grad[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double k) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x += k;
  return make_result(a.rows(), a.cols(), std::move(out), "add_scalar", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  mmap(out, c, r) = cmap(a.node()->value, r, c).transpose();
  return make_result(c, r, std::move(out), "transpose", {a}, [r, c](Node& self) {
    if (Node* pa = wants(self, 0)) mmap(pa->grad_buffer(), r, c) += cmap(self.grad, c, r).transpose();
  });
}

Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.size()) {
    shape_error("reshape", "cannot view " + a.shape_str() + " as (" + std::to_string(rows) + ", " +
                               std::to_string(cols) + ")");
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(rows, cols, std::move(out), "reshape", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
  });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) shape_error("concat", "no inputs");
  if (axis != 0 && axis != 1) shape_error("concat", "axis must be 0 or 1");
  std::vector<std::size_t> offsets;
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const Tensor& p : parts) {
      if (p.cols() != cols) shape_error("concat", parts[0], p);
      offsets.push_back(rows);
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const Tensor& p : parts) {
      if (p.rows() != rows) shape_error("concat", parts[0], p);
      offsets.push_back(cols);
      cols += p.cols();
    }
  }
  std::vector<double> out(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].node()->value;
    const std::size_t pr = parts[k].rows(), pc = parts[k].cols();
    if (axis == 0) {
      std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(offsets[k] * cols));
    } else {
      for (std::size_t i = 0; i < pr; ++i)
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * pc), pc,
                    out.begin() + static_cast<std::ptrdiff_t>(i * cols + offsets[k]));
    }
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result(rows, cols, std::move(out), "concat", std::move(parents), [axis, offsets, cols](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node* p = wants(self, k);
      if (!p) continue;
      auto& gp = p->grad_buffer();
      if (axis == 0) {
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[offsets[k] * cols + i];
      } else {
        for (std::size_t i = 0; i < p->rows; ++i)
          for (std::size_t j = 0; j < p->cols; ++j) gp[i * p->cols + j] += self.grad[i * cols + offsets[k] + j];
      }
    }
  });
}

Tensor sum(const Tensor& a, int axis) {
  const std::size_t r = a.rows(), c = a.cols();
  const auto& v = a.node()->value;
  if (axis == -1) {
    double s = 0.0;
    for (double x : v) s += x;
    return make_result(1, 1, {s}, "sum", {a}, [](Node& self) {
      if (Node* pa = wants(self, 0)) {
        for (double& g : pa->grad_buffer()) g += self.grad[0];
      }
    });
  }
  if (axis == 0) {
    std::vector<double> out(c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[j] += v[i * c + j];
    return make_result(1, c, std::move(out), "sum0", {a}, [r, c](Node& self) {
      if (Node* pa = wants(self, 0)) {
        auto& g = pa->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j];
      }
    });
  }
  if (axis == 1) {
    std::vector<double> out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[i] += v[i * c + j];
    return make_result(r, 1, std::move(out), "sum1", {a}, [r, c](Node& self) {
      if (Node* pa = wants(self, 0)) {
        auto& g = pa->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i];
      }
    });
  }
  shape_error("sum", "axis must be -1, 0 or 1");
}

Tensor mean(const Tensor& a, int axis) {
  const double count = axis == -1 ? static_cast<double>(a.size())
                       : axis == 0 ? static_cast<double>(a.rows())
                                   : static_cast<double>(a.cols());
  if (count == 0.0) shape_error("mean", "reduction over an empty axis");
  return scale(sum(a, axis), 1.0 / count);
}

Tensor max(const Tensor& a, int axis) {
  if (axis != 0 && axis != 1) shape_error("max", "axis must be 0 or 1");
  const std::size_t r = a.rows(), c = a.cols();
  const auto& v = a.node()->value;
  const std::size_t outer = axis == 0 ? c : r;
  const std::size_t inner = axis == 0 ? r : c;
  if (inner == 0) shape_error("max", "reduction over an empty axis");
  std::vector<double> out(outer);
  std::vector<std::size_t> argmax(outer);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t idx = axis == 0 ? i * c + o : o * c + i;
      if (i == 0 || v[idx] > bv) {
        bv = v[idx];
        best = idx;
      }
    }
    out[o] = bv;
    argmax[o] = best;
  }
  return make_result(axis == 0 ? 1 : r, axis == 0 ? c : 1, std::move(out), "max", {a},
                     [argmax = std::move(argmax)](Node& self) {
                       if (Node* pa = wants(self, 0)) {
                         auto& g = pa->grad_buffer();
                         for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
                       }
                     });
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(v[i]);
  return make_result(a.rows(), a.cols(), std::move(out), "exp", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i];
    }
  });
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(v[i]);
  return make_result(a.rows(), a.cols(), std::move(out), "log", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      const auto& x = pa->value;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / x[i];
    }
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(v[i]);
  return make_result(a.rows(), a.cols(), std::move(out), "tanh", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return make_result(a.rows(), a.cols(), std::move(out), "relu", {a}, [](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      const auto& x = pa->value;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

namespace {

/// Visits each softmax slice as (count, stride, offset-of-first).
template <class Fn>
void for_each_slice(std::size_t r, std::size_t c, int axis, Fn&& fn) {
  if (axis == 1) {
    for (std::size_t i = 0; i < r; ++i) fn(c, std::size_t{1}, i * c);
  } else {
    for (std::size_t j = 0; j < c; ++j) fn(r, c, j);
  }
}

Tensor softmax_impl(const Tensor& a, int axis, bool log_space) {
  if (axis != 0 && axis != 1) shape_error("softmax", "axis must be 0 or 1");
  const std::size_t r = a.rows(), c = a.cols();
  const auto& v = a.node()->value;
  std::vector<double> out(v.size());
  for_each_slice(r, c, axis, [&](std::size_t count, std::size_t stride, std::size_t off) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) mx = std::max(mx, v[off + k * stride]);
    if (mx == -std::numeric_limits<double>::infinity()) shape_error("softmax", "slice has no finite entry");
    double z = 0.0;
    for (std::size_t k = 0; k < count; ++k) z += std::exp(v[off + k * stride] - mx);
    const double logz = std::log(z);
    for (std::size_t k = 0; k < count; ++k) {
      const double shifted = v[off + k * stride] - mx;
      out[off + k * stride] = log_space ? shifted - logz : std::exp(shifted) / z;
    }
  });
  return make_result(r, c, std::move(out), log_space ? "log_softmax" : "softmax", {a},
                     [r, c, axis, log_space](Node& self) {
                       Node* pa = wants(self, 0);
                       if (!pa) return;
                       auto& g = pa->grad_buffer();
                       const auto& y = self.value;
                       const auto& gy = self.grad;
                       for_each_slice(r, c, axis, [&](std::size_t count, std::size_t stride, std::size_t off) {
                         if (log_space) {
                           double s = 0.0;
                           for (std::size_t k = 0; k < count; ++k) s += gy[off + k * stride];
                           for (std::size_t k = 0; k < count; ++k) {
                             const std::size_t idx = off + k * stride;
                             g[idx] += gy[idx] - std::exp(y[idx]) * s;
                           }
                         } else {
                           double dot = 0.0;
                           for (std::size_t k = 0; k < count; ++k) dot += gy[off + k * stride] * y[off + k * stride];
                           for (std::size_t k = 0; k < count; ++k) {
                             const std::size_t idx = off + k * stride;
                             g[idx] += y[idx] * (gy[idx] - dot);
                           }
                         }
                       });
                     });
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) { return softmax_impl(a, axis, false); }
Tensor log_softmax(const Tensor& a, int axis) { return softmax_impl(a, axis, true); }

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  const std::size_t c = a.cols();
  const auto& v = a.node()->value;
  std::vector<double> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) shape_error("gather_rows", "row index out of range for " + a.shape_str());
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(rows[i] * c), c,
                out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_result(rows.size(), c, std::move(out), "gather_rows", {a}, [idx = std::move(idx), c](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
    }
  });
}

Tensor pick(const Tensor& a, std::span<const std::size_t> cols) {
  if (cols.size() != a.rows()) shape_error("pick", "need one column index per row of " + a.shape_str());
  const std::size_t c = a.cols();
  std::vector<double> out(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= c) shape_error("pick", "column index out of range for " + a.shape_str());
    out[i] = a.node()->value[i * c + cols[i]];
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return make_result(cols.size(), 1, std::move(out), "pick", {a}, [idx = std::move(idx), c](Node& self) {
    if (Node* pa = wants(self, 0)) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i) g[i * c + idx[i]] += self.grad[i];
    }
  });
}

BatchNormState BatchNormState::make(std::size_t channels) {
  BatchNormState s;
  s.running_mean = Tensor::zeros(1, channels);
  s.running_var = Tensor::full(1, channels, 1.0);
  return s;
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, bool training) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c) shape_error("batchnorm", x, gamma);
  if (beta.rows() != 1 || beta.cols() != c) shape_error("batchnorm", x, beta);
  if (state.running_mean.cols() != c) shape_error("batchnorm", x, state.running_mean);
  if (r == 0) shape_error("batchnorm", "empty batch");
  const auto& v = x.node()->value;
  const auto& gv = gamma.node()->value;
  const auto& bv = beta.node()->value;

  std::vector<double> mu(c, 0.0), var(c, 0.0);
  if (training) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) mu[j] += v[i * c + j];
    for (double& m : mu) m /= static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = v[i * c + j] - mu[j];
        var[j] += d * d;
      }
    for (double& s : var) s /= static_cast<double>(r);
    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    const double unbias = r > 1 ? static_cast<double>(r) / static_cast<double>(r - 1) : 1.0;
    for (std::size_t j = 0; j < c; ++j) {
      rm[j] = (1.0 - state.momentum) * rm[j] + state.momentum * mu[j];
      rv[j] = (1.0 - state.momentum) * rv[j] + state.momentum * var[j] * unbias;
    }
  } else {
    const auto rm = state.running_mean.data();
    const auto rv = state.running_var.data();
    std::copy(rm.begin(), rm.end(), mu.begin());
    std::copy(rv.begin(), rv.end(), var.begin());
  }
  std::vector<double> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + state.eps);
  std::vector<double> xhat(r * c), out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t k = i * c + j;
      xhat[k] = (v[k] - mu[j]) * inv_std[j];
      out[k] = gv[j] * xhat[k] + bv[j];
    }
  return make_result(r, c, std::move(out), "batchnorm", {x, gamma, beta},
                     [r, c, training, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& g = self.grad;
                       const auto& gv = self.parents[1]->value;
                       if (Node* pg = wants(self, 1)) {
                         auto& gg = pg->grad_buffer();
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * xhat[i * c + j];
                       }
                       if (Node* pb = wants(self, 2)) {
                         auto& gb = pb->grad_buffer();
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                       }
                       Node* px = wants(self, 0);
                       if (!px) return;
                       auto& gx = px->grad_buffer();
                       if (!training) {
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * gv[j] * inv_std[j];
                         return;
                       }
                       // dx = gamma/std * (g - mean(g) - xhat * mean(g * xhat))
                       std::vector<double> mg(c, 0.0), mgx(c, 0.0);
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           mg[j] += g[i * c + j];
                           mgx[j] += g[i * c + j] * xhat[i * c + j];
                         }
                       const double inv_r = 1.0 / static_cast<double>(r);
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           const std::size_t k = i * c + j;
                           gx[k] += gv[j] * inv_std[j] * (g[k] - mg[j] * inv_r - xhat[k] * mgx[j] * inv_r);
                         }
                     });
}

Tensor segment_sum(const Tensor& x, std::size_t group) {
  if (group == 0 || x.rows() % group != 0) {
    shape_error("segment_sum", x.shape_str() + " rows not divisible by group " + std::to_string(group));
  }
  const std::size_t items = x.rows() / group, c = x.cols();
  const auto& v = x.node()->value;
  std::vector<double> out(items * c, 0.0);
  for (std::size_t i = 0; i < items; ++i)
    for (std::size_t g = 0; g < group; ++g)
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += v[(i * group + g) * c + j];
  return make_result(items, c, std::move(out), "segment_sum", {x}, [items, group, c](Node& self) {
    if (Node* px = wants(self, 0)) {
      auto& gx = px->grad_buffer();
      for (std::size_t i = 0; i < items; ++i)
        for (std::size_t g = 0; g < group; ++g)
          for (std::size_t j = 0; j < c; ++j) gx[(i * group + g) * c + j] += self.grad[i * c + j];
    }
  });
}

Tensor segment_mean(const Tensor& x, std::size_t group) {
  return scale(segment_sum(x, group), 1.0 / static_cast<double>(group));
}

Tensor expand_rows(const Tensor& x, std::size_t group) {
  const std::size_t items = x.rows(), c = x.cols();
  const auto& v = x.node()->value;
  std::vector<double> out(items * group * c);
  for (std::size_t i = 0; i < items; ++i)
    for (std::size_t g = 0; g < group; ++g)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * c), c,
                  out.begin() + static_cast<std::ptrdiff_t>((i * group + g) * c));
  return make_result(items * group, c, std::move(out), "expand_rows", {x}, [items, group, c](Node& self) {
    if (Node* px = wants(self, 0)) {
      auto& gx = px->grad_buffer();
      for (std::size_t i = 0; i < items; ++i)
        for (std::size_t g = 0; g < group; ++g)
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[(i * group + g) * c + j];
    }
  });
}

}  // namespace mtsp::ad
