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

#ifndef UXSID_MODEL_PARAMS_H_
#define UXSID_MODEL_PARAMS_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "uxsid/model/config.h"
#include "uxsid/numerics/matrix.h"

namespace uxsid::model {

using numerics::BasicMatrix;
using numerics::BasicParam;
using numerics::Matrix;

inline constexpr size_t kAbsent = std::numeric_limits<size_t>::max();

// Positions of each tensor in ParamSet::params. Tensors a variant does not
// use are kAbsent.
struct ParamIndex {
  size_t item_emb = kAbsent, sid_emb = kAbsent, user_emb = kAbsent;
  // Interest compression.
  size_t anchors = kAbsent, iaic_wq = kAbsent, iaic_wk = kAbsent, iaic_wv = kAbsent;
  size_t ffn_w1 = kAbsent, ffn_b1 = kAbsent, ffn_w2 = kAbsent, ffn_b2 = kAbsent;
  size_t ln_gain = kAbsent, ln_bias = kAbsent;
  // Explicit probe, gate, latent probe, online attention.
  size_t global_wq = kAbsent, global_wk = kAbsent, global_wv = kAbsent;
  size_t gate_w1 = kAbsent, gate_b1 = kAbsent, gate_w2 = kAbsent, gate_b2 = kAbsent;
  size_t local_wq = kAbsent, local_wk = kAbsent, local_wv = kAbsent;
  size_t online_wq = kAbsent, online_wk = kAbsent, online_wv = kAbsent;
  // Target attention shared by the baselines.
  size_t att_wq = kAbsent, att_wk = kAbsent, att_wv = kAbsent;
  std::vector<size_t> head_w, head_b;
};

template <typename T>
struct ParamSet {
  ModelConfig config;
  ParamIndex idx;
  std::vector<BasicParam<T>> params;

  const BasicParam<T>& at(size_t i) const { return params.at(i); }
  size_t index_of(const std::string& name) const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    out.config = config;
    out.idx = idx;
    for (const auto& p : params) out.params.emplace_back(p.name, p.value.template cast<U>());
    return out;
  }
};

// Builds the tensor list for config.variant and initializes it: Xavier
// uniform for projections, FFN and head weights; N(0, 1/d) for embedding
// tables and anchors; zero biases; unit layer-norm gain.
ParamSet<float> init_params(const ModelConfig& config, size_t num_items, size_t num_sids,
                            size_t num_users, uint64_t seed);

// Assigns indices from tensor names; used after loading a checkpoint.
ParamIndex index_params(const std::vector<std::string>& names, size_t head_layers);

// FNV-1a over config, names, shapes and values.
uint64_t params_checksum(const ParamSet<float>& ps);

}  // namespace uxsid::model

#endif  // UXSID_MODEL_PARAMS_H_
