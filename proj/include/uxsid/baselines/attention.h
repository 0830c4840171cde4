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

#ifndef UXSID_BASELINES_ATTENTION_H_
#define UXSID_BASELINES_ATTENTION_H_

#include <cstdint>
#include <span>

#include "uxsid/baselines/retrieval.h"
#include "uxsid/model/model.h"

namespace uxsid::baselines {

// Target attention of [item ; sid](target) over the last n behaviors, with
// the att.* parameters of a din/sim model. Returns 1 x d.
numerics::Matrix truncated_target_attention(const model::Model& m, std::span<const int32_t> history,
                                            int32_t target, size_t n);

struct EsuOutput {
  numerics::Matrix value;  // 1 x d, zeros when nothing was retrieved
  bool empty = false;
};

// The same attention restricted to the retrieved positions of `history`.
EsuOutput esu_attention(const model::Model& m, std::span<const int32_t> history,
                        const RetrievedSubsequence& retrieved, int32_t target);

}  // namespace uxsid::baselines

#endif  // UXSID_BASELINES_ATTENTION_H_
