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

#ifndef UXSID_BASELINES_RETRIEVAL_H_
#define UXSID_BASELINES_RETRIEVAL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::baselines {

// Positions into the original sequence plus the score each was retrieved by.
struct RetrievedSubsequence {
  std::vector<int32_t> positions;
  std::vector<float> scores;
};

// The r most recent behaviors whose category equals target_category, in
// time order. Scores are 1.
RetrievedSubsequence gsu_hard(std::span<const int32_t> categories, int32_t target_category,
                              size_t r);

// Top-r rows of seq_embs by inner product with target, highest first; equal
// scores prefer the more recent position.
template <typename T>
RetrievedSubsequence gsu_soft(const numerics::BasicMatrix<T>& seq_embs, std::span<const T> target,
                              size_t r);

}  // namespace uxsid::baselines

#endif  // UXSID_BASELINES_RETRIEVAL_H_
