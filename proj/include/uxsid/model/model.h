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

#ifndef UXSID_MODEL_MODEL_H_
#define UXSID_MODEL_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uxsid/model/network.h"

namespace uxsid::model {

struct Model {
  ModelConfig config;
  Vocab vocab;
  ParamSet<float> params;
};

Model create_model(const ModelConfig& config, Vocab vocab);

// E^UxSID = [e_global ; e_local] plus what the probes attended to.
struct EmbedResult {
  Matrix embedding;                  // 2 x d
  std::vector<float> global_scores;  // over the visible history
  std::vector<float> local_scores;   // over the K anchors
  Matrix anchors;                    // P, K x d
  size_t seq_begin = 0;
};

EmbedResult uxsid_embed(const Model& m, std::span<const int32_t> history, int32_t sid);

// One embedding per SID, sharing the sequence-level work. Row for row the
// arithmetic is the same as uxsid_embed, so results are bit-identical.
std::vector<EmbedResult> uxsid_embed_many(const Model& m, std::span<const int32_t> history,
                                          std::span<const int32_t> sids);

// Full-path probabilities for a group of impressions.
std::vector<float> predict(const Model& m, const GroupInput& in);

// Online attention readout over a cached 2 x d record for one target item.
Matrix online_rank(const Model& m, int32_t target_item, const Matrix& cached);

// Probability computed from cached records (one per target) instead of the
// sequence; only the short-term window of `history` is read.
std::vector<float> predict_from_cache(const Model& m, int32_t user, std::span<const int32_t> history,
                                      std::span<const int32_t> targets,
                                      std::span<const Matrix> cached);

std::vector<uint8_t> serialize_model(const Model& m);
Model deserialize_model(std::span<const uint8_t> bytes);
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace uxsid::model

#endif  // UXSID_MODEL_MODEL_H_
