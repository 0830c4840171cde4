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

#include "uxsid/numerics/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace uxsid::numerics {
namespace {

std::string shape(size_t r, size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename T>
void prepare(BasicMatrix<T>& out, size_t rows, size_t cols, bool accumulate,
             const char* op) {
  if (accumulate) {
    if (out.rows() != rows || out.cols() != cols) {
      throw DimensionError(std::string(op) + ": accumulator is " +
                           shape(out.rows(), out.cols()) + ", expected " +
                           shape(rows, cols));
    }
    return;
  }
  if (out.rows() != rows || out.cols() != cols) {
    out = BasicMatrix<T>(rows, cols);
  } else {
    out.fill(T{0});
  }
}

// Inner loop over a contiguous output row; compilers vectorize this.
template <typename T>
inline void axpy_row(T alpha, const T* x, T* y, size_t n) {
  for (size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

}  // namespace

template <typename T>
void gemm(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
          bool accumulate) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a.rows(), a.cols()) + " * " +
                         shape(b.rows(), b.cols()));
  }
  prepare(out, a.rows(), b.cols(), accumulate, "matmul");
  const size_t n = b.cols();
  for (size_t i = 0; i < a.rows(); ++i) {
    T* orow = out.data() + i * n;
    const T* arow = a.data() + i * a.cols();
    for (size_t k = 0; k < a.cols(); ++k) axpy_row(arow[k], b.data() + k * n, orow, n);
  }
}

template <typename T>
void gemm_bt(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
             bool accumulate) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: " + shape(a.rows(), a.cols()) + " * (" +
                         shape(b.rows(), b.cols()) + ")^T");
  }
  gemm(a, transpose(b), out, accumulate);
}

template <typename T>
void gemm_at(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
             bool accumulate) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at: (" + shape(a.rows(), a.cols()) + ")^T * " +
                         shape(b.rows(), b.cols()));
  }
  prepare(out, a.cols(), b.cols(), accumulate, "matmul_at");
  const size_t n = b.cols();
  for (size_t k = 0; k < a.rows(); ++k) {
    const T* arow = a.data() + k * a.cols();
    const T* brow = b.data() + k * n;
    for (size_t i = 0; i < a.cols(); ++i) axpy_row(arow[i], brow, out.data() + i * n, n);
  }
}

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  BasicMatrix<T> out;
  gemm(a, b, out, false);
  return out;
}

template <typename T>
BasicMatrix<T> matmul_bt(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  BasicMatrix<T> out;
  gemm_bt(a, b, out, false);
  return out;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m) {
  BasicMatrix<T> t(m.cols(), m.rows());
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

template <typename T>
BasicMatrix<T> softmax_rows(const BasicMatrix<T>& m) {
  BasicMatrix<T> out(m.rows(), m.cols());
  for (size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    T mx = in.empty() ? T{0} : in[0];
    for (T v : in) mx = std::max(mx, v);
    T sum{0};
    for (size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    const T inv = T{1} / sum;
    for (T& v : o) v *= inv;
  }
  return out;
}

template <typename T>
T sigmoid(T x) {
  // Branching on the sign keeps exp() from overflowing for large |x|. The
  // result is clamped to the open interval: in finite precision 1/(1+e^-x)
  // rounds to exactly 1 once x exceeds ~17 (float) or ~37 (double).
  constexpr T kLo = std::numeric_limits<T>::min();
  constexpr T kHi = T{1} - std::numeric_limits<T>::epsilon() / T{2};
  T y;
  if (x >= T{0}) {
    y = T{1} / (T{1} + std::exp(-x));
  } else {
    const T e = std::exp(x);
    y = e / (T{1} + e);
  }
  return std::clamp(y, kLo, kHi);
}

template <typename T>
BasicMatrix<T> sigmoid(const BasicMatrix<T>& m) {
  BasicMatrix<T> out(m.rows(), m.cols());
  for (size_t i = 0; i < m.size(); ++i) out.values()[i] = sigmoid(m.values()[i]);
  return out;
}

template <typename T>
std::vector<T> layer_norm(std::span<const T> v, std::span<const T> gain,
                          std::span<const T> bias, T eps) {
  if (gain.size() != v.size() || bias.size() != v.size()) {
    throw DimensionError("layer_norm: gain/bias length must match input");
  }
  const size_t d = v.size();
  T mean{0};
  for (T x : v) mean += x;
  mean /= static_cast<T>(d);
  T var{0};
  for (T x : v) var += (x - mean) * (x - mean);
  var /= static_cast<T>(d);
  const T inv_std = T{1} / std::sqrt(var + eps);
  std::vector<T> out(d);
  for (size_t i = 0; i < d; ++i) out[i] = gain[i] * ((v[i] - mean) * inv_std) + bias[i];
  return out;
}

template <typename T>
T frobenius_norm(const BasicMatrix<T>& m) {
  T s{0};
  for (T v : m.values()) s += v * v;
  return std::sqrt(s);
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  T s{0};
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
bool all_finite(const BasicMatrix<T>& m) {
  for (T v : m.values())
    if (!std::isfinite(v)) return false;
  return true;
}

#define UXSID_INSTANTIATE_KERNELS(T)                                                  \
  template void gemm(const BasicMatrix<T>&, const BasicMatrix<T>&, BasicMatrix<T>&,   \
                     bool);                                                           \
  template void gemm_bt(const BasicMatrix<T>&, const BasicMatrix<T>&,                 \
                        BasicMatrix<T>&, bool);                                       \
  template void gemm_at(const BasicMatrix<T>&, const BasicMatrix<T>&,                 \
                        BasicMatrix<T>&, bool);                                       \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);       \
  template BasicMatrix<T> matmul_bt(const BasicMatrix<T>&, const BasicMatrix<T>&);    \
  template BasicMatrix<T> transpose(const BasicMatrix<T>&);                           \
  template BasicMatrix<T> softmax_rows(const BasicMatrix<T>&);                        \
  template T sigmoid(T);                                                              \
  template BasicMatrix<T> sigmoid(const BasicMatrix<T>&);                             \
  template std::vector<T> layer_norm(std::span<const T>, std::span<const T>,          \
                                     std::span<const T>, T);                          \
  template T frobenius_norm(const BasicMatrix<T>&);                                   \
  template T dot(std::span<const T>, std::span<const T>);                             \
  template bool all_finite(const BasicMatrix<T>&);

UXSID_INSTANTIATE_KERNELS(float)
UXSID_INSTANTIATE_KERNELS(double)

#undef UXSID_INSTANTIATE_KERNELS

}  // namespace uxsid::numerics
