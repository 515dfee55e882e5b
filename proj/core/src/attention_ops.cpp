#include <cmath>
#include <limits>

#include "mtsp/ops.hpp"

namespace mtsp::ad {

using detail::make_result;
using detail::shape_error;

namespace {

Node* wants(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  return p->requires_grad ? p : nullptr;
}

}  // namespace

Tensor group_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t group, std::size_t heads,
                       bool exclude_self) {
  if (q.rows() != k.rows() || q.cols() != k.cols()) shape_error("group_attention", q, k);
  if (q.rows() != v.rows() || q.cols() != v.cols()) shape_error("group_attention", q, v);
  if (group == 0 || q.rows() % group != 0) shape_error("group_attention", "rows not divisible by group");
  if (heads == 0 || q.cols() % heads != 0) shape_error("group_attention", "width not divisible by heads");
  const std::size_t items = q.rows() / group, d = q.cols(), dk = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  const auto& Q = q.node()->value;
  const auto& K = k.node()->value;
  const auto& V = v.node()->value;

  // weights[(item, head)] is a group x group block
  std::vector<double> weights(items * heads * group * group, 0.0);
  std::vector<double> out(q.size(), 0.0);
  std::vector<double> row(group);
  for (std::size_t it = 0; it < items; ++it) {
    const std::size_t base = it * group;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dk;
      double* W = &weights[(it * heads + h) * group * group];
      for (std::size_t i = 0; i < group; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < group; ++j) {
          if (exclude_self && i == j) {
            row[j] = -std::numeric_limits<double>::infinity();
            continue;
          }
          double s = 0.0;
          const double* qi = &Q[(base + i) * d + col];
          const double* kj = &K[(base + j) * d + col];
          for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
          row[j] = s * inv_sqrt;
          mx = std::max(mx, row[j]);
        }
        if (mx == -std::numeric_limits<double>::infinity()) continue;  // lone node
        double z = 0.0;
        for (std::size_t j = 0; j < group; ++j) {
          const double e = (exclude_self && i == j) ? 0.0 : std::exp(row[j] - mx);
          W[i * group + j] = e;
          z += e;
        }
        double* oi = &out[(base + i) * d + col];
        for (std::size_t j = 0; j < group; ++j) {
          W[i * group + j] /= z;
          const double w = W[i * group + j];
          if (w == 0.0) continue;
          const double* vj = &V[(base + j) * d + col];
          for (std::size_t c = 0; c < dk; ++c) oi[c] += w * vj[c];
        }
      }
    }
  }

  return make_result(q.rows(), d, std::move(out), "group_attention", {q, k, v},
                     [items, group, heads, d, dk, inv_sqrt, weights = std::move(weights)](Node& self) {
                       const auto& G = self.grad;
                       const auto& Q = self.parents[0]->value;
                       const auto& K = self.parents[1]->value;
                       const auto& V = self.parents[2]->value;
                       Node* pq = wants(self, 0);
                       Node* pk = wants(self, 1);
                       Node* pv = wants(self, 2);
                       std::vector<double>* gq = pq ? &pq->grad_buffer() : nullptr;
                       std::vector<double>* gk = pk ? &pk->grad_buffer() : nullptr;
                       std::vector<double>* gv = pv ? &pv->grad_buffer() : nullptr;
                       std::vector<double> dW(group), dS(group);
                       for (std::size_t it = 0; it < items; ++it) {
                         const std::size_t base = it * group;
                         for (std::size_t h = 0; h < heads; ++h) {
                           const std::size_t col = h * dk;
                           const double* W = &weights[(it * heads + h) * group * group];
                           for (std::size_t i = 0; i < group; ++i) {
                             const double* gi = &G[(base + i) * d + col];
                             double dot = 0.0;
                             for (std::size_t j = 0; j < group; ++j) {
                               const double w = W[i * group + j];
                               const double* vj = &V[(base + j) * d + col];
                               double s = 0.0;
                               for (std::size_t c = 0; c < dk; ++c) s += gi[c] * vj[c];
                               dW[j] = s;
                               dot += s * w;
                               if (gv && w != 0.0) {
                                 double* gvj = &(*gv)[(base + j) * d + col];
                                 for (std::size_t c = 0; c < dk; ++c) gvj[c] += w * gi[c];
                               }
                             }
                             for (std::size_t j = 0; j < group; ++j) dS[j] = W[i * group + j] * (dW[j] - dot) * inv_sqrt;
                             for (std::size_t j = 0; j < group; ++j) {
                               if (dS[j] == 0.0) continue;
                               const double* qi = &Q[(base + i) * d + col];
                               const double* kj = &K[(base + j) * d + col];
                               if (gq) {
                                 double* gqi = &(*gq)[(base + i) * d + col];
                                 for (std::size_t c = 0; c < dk; ++c) gqi[c] += dS[j] * kj[c];
                               }
                               if (gk) {
                                 double* gkj = &(*gk)[(base + j) * d + col];
                                 for (std::size_t c = 0; c < dk; ++c) gkj[c] += dS[j] * qi[c];
                               }
                             }
                           }
                         }
                       }
                     });
}

Tensor group_scores(const Tensor& q, const Tensor& k, std::size_t group, double scale) {
  if (q.cols() != k.cols() || k.rows() != q.rows() * group) shape_error("group_scores", q, k);
  const std::size_t items = q.rows(), d = q.cols();
  const auto& Q = q.node()->value;
  const auto& K = k.node()->value;
  std::vector<double> out(items * group);
  for (std::size_t i = 0; i < items; ++i)
    for (std::size_t j = 0; j < group; ++j) {
      double s = 0.0;
      const double* qi = &Q[i * d];
      const double* kj = &K[(i * group + j) * d];
      for (std::size_t c = 0; c < d; ++c) s += qi[c] * kj[c];
      out[i * group + j] = scale * s;
    }
  return make_result(items, group, std::move(out), "group_scores", {q, k}, [items, group, d, scale](Node& self) {
    const auto& G = self.grad;
    const auto& Q = self.parents[0]->value;
    const auto& K = self.parents[1]->value;
    Node* pq = wants(self, 0);
    Node* pk = wants(self, 1);
    for (std::size_t i = 0; i < items; ++i)
      for (std::size_t j = 0; j < group; ++j) {
        const double g = scale * G[i * group + j];
        if (g == 0.0) continue;
        if (pq) {
          double* gq = &pq->grad_buffer()[i * d];
          const double* kj = &K[(i * group + j) * d];
          for (std::size_t c = 0; c < d; ++c) gq[c] += g * kj[c];
        }
        if (pk) {
          double* gk = &pk->grad_buffer()[(i * group + j) * d];
          const double* qi = &Q[i * d];
          for (std::size_t c = 0; c < d; ++c) gk[c] += g * qi[c];
        }
      }
  });
}

Tensor group_weighted_sum(const Tensor& w, const Tensor& v, std::size_t group) {
  if (w.cols() != group || v.rows() != w.rows() * group) shape_error("group_weighted_sum", w, v);
  const std::size_t items = w.rows(), c = v.cols();
  const auto& W = w.node()->value;
  const auto& V = v.node()->value;
  std::vector<double> out(items * c, 0.0);
  for (std::size_t i = 0; i < items; ++i)
    for (std::size_t j = 0; j < group; ++j) {
      const double wij = W[i * group + j];
      const double* vj = &V[(i * group + j) * c];
      for (std::size_t k = 0; k < c; ++k) out[i * c + k] += wij * vj[k];
    }
  return make_result(items, c, std::move(out), "group_weighted_sum", {w, v}, [items, group, c](Node& self) {
    const auto& G = self.grad;
    const auto& W = self.parents[0]->value;
    const auto& V = self.parents[1]->value;
    Node* pw = wants(self, 0);
    Node* pv = wants(self, 1);
    for (std::size_t i = 0; i < items; ++i)
      for (std::size_t j = 0; j < group; ++j) {
        const double* gi = &G[i * c];
        if (pw) {
          double s = 0.0;
          const double* vj = &V[(i * group + j) * c];
          for (std::size_t k = 0; k < c; ++k) s += gi[k] * vj[k];
          pw->grad_buffer()[i * group + j] += s;
        }
        if (pv) {
          double* gv = &pv->grad_buffer()[(i * group + j) * c];
          const double wij = W[i * group + j];
          for (std::size_t k = 0; k < c; ++k) gv[k] += wij * gi[k];
        }
      }
  });
}

}  // namespace mtsp::ad
