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

#ifndef UXSID_MODEL_CONFIG_H_
#define UXSID_MODEL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

namespace uxsid::model {

// Sequence summarization block; everything else is shared.
enum class Variant { kUxsid, kDin, kSimHard, kSimSoft };
enum class OrthoMode { kFrobenius, kCosine };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);
const char* ortho_mode_name(OrthoMode m);
OrthoMode parse_ortho_mode(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kUxsid;
  size_t d = 16;
  size_t num_anchors = 16;
  size_t d_ff = 32;
  size_t d_g = 16;
  std::vector<size_t> head_hidden = {200, 80};
  size_t short_window = 10;
  OrthoMode ortho_mode = OrthoMode::kFrobenius;
  double lambda = 0.1;
  double learning_rate = 1e-3;
  size_t batch_size = 256;
  size_t max_epochs = 20;
  size_t patience = 3;
  uint64_t seed = 1;
  // Only the most recent max_history behaviors are used (0 = all).
  size_t max_history = 0;
  size_t din_window = 100;
  size_t gsu_r = 100;
  size_t int_k = 50;
  // Codebook trained by `train` when none is supplied.
  size_t sid_levels = 4;
  size_t sid_codewords = 256;

  void validate() const;
  // Width of the prediction head input.
  size_t head_input_width() const;
};

ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& config);

}  // namespace uxsid::model

#endif  // UXSID_MODEL_CONFIG_H_
