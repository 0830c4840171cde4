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

#include "uxsid/baselines/retrieval.h"

#include <algorithm>
#include <numeric>

#include "uxsid/common/error.h"
#include "uxsid/numerics/kernels.h"

namespace uxsid::baselines {

RetrievedSubsequence gsu_hard(std::span<const int32_t> categories, int32_t target_category,
                              size_t r) {
  if (r == 0) throw InvalidArgument("gsu_hard: r must be >= 1");
  RetrievedSubsequence out;
  for (size_t i = categories.size(); i-- > 0 && out.positions.size() < r;)
    if (categories[i] == target_category) out.positions.push_back(static_cast<int32_t>(i));
  std::reverse(out.positions.begin(), out.positions.end());
  out.scores.assign(out.positions.size(), 1.0f);
  return out;
}

template <typename T>
RetrievedSubsequence gsu_soft(const numerics::BasicMatrix<T>& seq_embs, std::span<const T> target,
                              size_t r) {
  if (r == 0) throw InvalidArgument("gsu_soft: r must be >= 1");
  if (target.size() != seq_embs.cols()) throw DimensionError("gsu_soft: target width mismatch");
  const size_t n = seq_embs.rows();
  std::vector<T> scores(n);
  for (size_t i = 0; i < n; ++i) scores[i] = numerics::dot<T>(seq_embs.row(i), target);
  std::vector<int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const size_t keep = std::min(r, n);
  auto better = [&](int32_t a, int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a > b;
  };
  const auto mid = order.begin() + static_cast<ptrdiff_t>(keep);
  if (keep < n) std::nth_element(order.begin(), mid, order.end(), better);
  std::sort(order.begin(), mid, better);
  RetrievedSubsequence out;
  out.positions.assign(order.begin(), order.begin() + static_cast<ptrdiff_t>(keep));
  for (int32_t p : out.positions) out.scores.push_back(static_cast<float>(scores[p]));
  return out;
}

template RetrievedSubsequence gsu_soft(const numerics::BasicMatrix<float>&, std::span<const float>,
                                       size_t);
template RetrievedSubsequence gsu_soft(const numerics::BasicMatrix<double>&, std::span<const double>,
                                       size_t);

}  // namespace uxsid::baselines
