#pragma once

#include <span>
#include <vector>

#include "mtsp/tensor.hpp"

namespace mtsp::ad {

// Shapes are (rows, cols). Broadcasting is limited to a 1x1 scalar operand
// and, for add/sub, a (1, cols) row bias against a (rows, cols) matrix.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double k);
Tensor add_scalar(const Tensor& a, double k);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);
Tensor concat(std::span<const Tensor> parts, int axis);
inline Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

/// axis 0 reduces rows -> (1, cols); axis 1 reduces cols -> (rows, 1);
/// axis -1 reduces everything -> (1, 1).
Tensor sum(const Tensor& a, int axis = -1);
Tensor mean(const Tensor& a, int axis = -1);
Tensor max(const Tensor& a, int axis);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

/// Entries equal to -inf receive probability 0. A slice that is entirely
/// -inf is an error.
Tensor softmax(const Tensor& a, int axis);
Tensor log_softmax(const Tensor& a, int axis);

/// Rows of `a` selected by index (repeats allowed).
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
/// out[i] = a(i, cols[i]); result is (rows, 1).
Tensor pick(const Tensor& a, std::span<const std::size_t> cols);

struct BatchNormState {
  Tensor running_mean;  // (1, c)
  Tensor running_var;   // (1, c)
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormState make(std::size_t channels);
};

/// Normalises each column over the rows. Training mode uses batch statistics
/// (biased variance) and folds them into the running estimates; eval mode
/// uses the running estimates.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, bool training);

// Grouped operators. A "grouped" matrix stacks `group` consecutive rows per
// item: (items * group, c).

/// (items*group, c) -> (items, c).
Tensor segment_sum(const Tensor& x, std::size_t group);
Tensor segment_mean(const Tensor& x, std::size_t group);
/// (items, c) -> (items*group, c), each row repeated `group` times.
Tensor expand_rows(const Tensor& x, std::size_t group);

/// Multi-head scaled dot-product attention inside each group. q, k, v are
/// (items*group, d) with d divisible by `heads`; head h uses columns
/// [h*d/heads, (h+1)*d/heads). With exclude_self a node does not attend to
/// itself; a group of one then yields zeros.
Tensor group_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t group, std::size_t heads,
                       bool exclude_self);

/// out(i, j) = scale * <q_i, k_{i*group + j}> for q (items, d), k
/// (items*group, d).
Tensor group_scores(const Tensor& q, const Tensor& k, std::size_t group, double scale);

/// out_i = sum_j w(i, j) * v_{i*group + j} for w (items, group).
Tensor group_weighted_sum(const Tensor& w, const Tensor& v, std::size_t group);

}  // namespace mtsp::ad
