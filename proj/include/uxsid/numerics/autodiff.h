/*
 * Copyright 2026 The UxSID Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UXSID_NUMERICS_AUTODIFF_H_
#define UXSID_NUMERICS_AUTODIFF_H_

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records each operation's output value and a closure that pushes the
// output gradient back to its inputs. Parameters enter as leaves that alias
// the parameter storage; their gradients are flushed into a GradientBuffer
// after the backward sweep. Embedding tables enter only through gather_rows,
// whose gradient is kept as sparse rows.
//
// With recording disabled the tape only evaluates values, so inference and
// training share one forward implementation (and therefore identical bits).

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::numerics {

template <typename T>
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(size_t num_params) : dense_(num_params), sparse_(num_params) {}

  void resize(size_t num_params) {
    dense_.assign(num_params, {});
    sparse_.assign(num_params, {});
  }
  void clear();

  // Dense accumulator for a parameter, zero-initialized on first use.
  BasicMatrix<T>& dense(size_t param, size_t rows, size_t cols);
  // Sparse accumulator for one row of an embedding table.
  std::span<T> sparse_row(size_t param, int32_t row, size_t cols);

  // Adds every accumulated gradient into params[i].grad.
  void add_to(std::span<BasicParam<T>> params) const;
  bool all_finite() const;

 private:
  std::vector<BasicMatrix<T>> dense_;
  std::vector<std::map<int32_t, std::vector<T>>> sparse_;
};

struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Tape {
 public:
  using Mat = BasicMatrix<T>;
  using Backward = std::function<void(Tape&)>;

  // sink may be null when recording is off.
  explicit Tape(bool record = false, GradientBuffer<T>* sink = nullptr)
      : record_(record), sink_(sink) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  GradientBuffer<T>* sink() const { return sink_; }

  Var constant(Mat value);
  // Leaf aliasing `param.value`; `index` addresses the sink slot.
  Var param(const BasicParam<T>& param, size_t index);

  const Mat& value(Var v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    return n.alias ? *n.alias : n.value;
  }
  // Gradient slot of v, zero-allocated on first access.
  Mat& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[static_cast<size_t>(v.id)].grad.empty(); }

  // Records an op output. The closure is dropped when not recording.
  Var push(Mat value, Backward backward);

  // Seeds d(root)=1 for a 1x1 root, sweeps in reverse, flushes leaves.
  void backward(Var root);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* alias = nullptr;
    Mat grad;
    Backward backward;
    int64_t param_index = -1;
  };

  bool record_;
  GradientBuffer<T>* sink_;
  std::vector<Node> nodes_;
};

namespace ad {

template <typename T> Var matmul(Tape<T>& t, Var a, Var b);
// a * b^T
template <typename T> Var matmul_bt(Tape<T>& t, Var a, Var b);
template <typename T> Var add(Tape<T>& t, Var a, Var b);
template <typename T> Var sub(Tape<T>& t, Var a, Var b);
// a (n x c) + b (1 x c) broadcast over rows.
template <typename T> Var add_row(Tape<T>& t, Var a, Var b);
template <typename T> Var hadamard(Tape<T>& t, Var a, Var b);
template <typename T> Var scale(Tape<T>& t, Var a, T s);
template <typename T> Var sigmoid(Tape<T>& t, Var a);
template <typename T> Var relu(Tape<T>& t, Var a);
template <typename T> Var softmax_rows(Tape<T>& t, Var a);
// Row-wise layer norm; gain/bias are n x d (per-row) or 1 x d (shared).
template <typename T> Var layer_norm_rows(Tape<T>& t, Var x, Var gain, Var bias, T eps);
// Row k of x (K x a) times block k of w ((K*a) x b).
template <typename T> Var blockwise_matmul(Tape<T>& t, Var x, Var w);
template <typename T> Var concat_cols(Tape<T>& t, std::span<const Var> parts);
template <typename T> Var concat_rows(Tape<T>& t, std::span<const Var> parts);
template <typename T> Var broadcast_rows(Tape<T>& t, Var a, size_t n);
// Mean of rows [begin, end) as a 1 x c row.
template <typename T> Var mean_rows(Tape<T>& t, Var a, size_t begin, size_t end);
template <typename T> Var slice_rows(Tape<T>& t, Var a, size_t begin, size_t end);
template <typename T> Var gather_var_rows(Tape<T>& t, Var a, std::span<const int32_t> rows);
// Embedding lookup from a parameter table (sparse gradient).
template <typename T>
Var gather_rows(Tape<T>& t, const BasicParam<T>& table, size_t index,
                std::span<const int32_t> rows);
// n x 1 column of row-wise dot products.
template <typename T> Var row_dot(Tape<T>& t, Var a, Var b);
// Scales row i of a (n x c) by w(i, 0).
template <typename T> Var scale_rows(Tape<T>& t, Var a, Var w);
template <typename T> Var select_col(Tape<T>& t, Var a, size_t col);
// 1 x 1 sum of squared entries.
template <typename T> Var sum_squares(Tape<T>& t, Var a);
// a / s for a 1 x 1 node s.
template <typename T> Var div_scalar(Tape<T>& t, Var a, Var s);
// a + alpha * I for square a.
template <typename T> Var add_identity(Tape<T>& t, Var a, T alpha);
// 1 x 1 Frobenius norm; its gradient at 0 is taken as 0.
template <typename T> Var frobenius(Tape<T>& t, Var a);
template <typename T> Var row_normalize(Tape<T>& t, Var a);
// Sum over rows of binary cross-entropy where logits are (n x 2) and
// p = softmax(row)[1], clamped to [1e-7, 1 - 1e-7].
template <typename T>
Var bce_logit_pair_sum(Tape<T>& t, Var logits, std::span<const float> labels);

}  // namespace ad

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace uxsid::numerics

#endif  // UXSID_NUMERICS_AUTODIFF_H_
