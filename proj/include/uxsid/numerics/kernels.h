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

#ifndef UXSID_NUMERICS_KERNELS_H_
#define UXSID_NUMERICS_KERNELS_H_

// Dense kernels. Every reduction runs in a fixed loop order (ascending inner
// index), so identical inputs give identical bits regardless of batch layout:
// output row i of a product depends only on row i of the left operand.

#include <span>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::numerics {

// out (+)= a * b
template <typename T>
void gemm(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
          bool accumulate);
// out (+)= a * b^T
template <typename T>
void gemm_bt(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
             bool accumulate);
// out (+)= a^T * b
template <typename T>
void gemm_at(const BasicMatrix<T>& a, const BasicMatrix<T>& b, BasicMatrix<T>& out,
             bool accumulate);

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <typename T>
BasicMatrix<T> matmul_bt(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m);

// Row-wise softmax with per-row max subtraction.
template <typename T>
BasicMatrix<T> softmax_rows(const BasicMatrix<T>& m);

template <typename T>
T sigmoid(T x);
template <typename T>
BasicMatrix<T> sigmoid(const BasicMatrix<T>& m);

// gain * (v - mean) / sqrt(var + eps) + bias, population variance.
template <typename T>
std::vector<T> layer_norm(std::span<const T> v, std::span<const T> gain,
                          std::span<const T> bias, T eps);

template <typename T>
T frobenius_norm(const BasicMatrix<T>& m);

template <typename T>
T dot(std::span<const T> a, std::span<const T> b);

template <typename T>
bool all_finite(const BasicMatrix<T>& m);

inline constexpr float kLayerNormEps = 1e-5f;

}  // namespace uxsid::numerics

#endif  // UXSID_NUMERICS_KERNELS_H_
