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

#include "uxsid/model/config.h"

#include <algorithm>

#include "json.hpp"
#include "uxsid/common/error.h"
#include "uxsid/common/json_util.h"

namespace uxsid::model {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kUxsid: return "uxsid";
    case Variant::kDin: return "din";
    case Variant::kSimHard: return "sim_hard";
    case Variant::kSimSoft: return "sim_soft";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "uxsid") return Variant::kUxsid;
  if (name == "din") return Variant::kDin;
  if (name == "sim_hard") return Variant::kSimHard;
  if (name == "sim_soft") return Variant::kSimSoft;
  throw InvalidArgument("unknown model variant \"" + name + "\"");
}

const char* ortho_mode_name(OrthoMode m) {
  return m == OrthoMode::kFrobenius ? "frobenius" : "cosine";
}

OrthoMode parse_ortho_mode(const std::string& name) {
  if (name == "frobenius") return OrthoMode::kFrobenius;
  if (name == "cosine") return OrthoMode::kCosine;
  throw InvalidArgument("unknown ortho_mode \"" + name + "\"");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("model config: ") + what);
  };
  require(d >= 1 && num_anchors >= 1 && d_ff >= 1 && d_g >= 1, "dimensions must be >= 1");
  require(std::all_of(head_hidden.begin(), head_hidden.end(), [](size_t h) { return h >= 1; }),
          "head layers must be >= 1 wide");
  require(short_window >= 1, "short_window must be >= 1");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(din_window >= 1 && gsu_r >= 1 && int_k >= 1, "window sizes must be >= 1");
  require(sid_levels >= 1 && sid_codewords >= 1, "codebook shape must be >= 1");
}

size_t ModelConfig::head_input_width() const {
  // item, sid, user, short-term, then the variant's sequence features.
  return variant == Variant::kUxsid ? 7 * d : 5 * d;
}

ModelConfig model_config_from_json(const std::string& text) {
  const std::string w = "model config";
  const nlohmann::json j = parse_json_line(text, w);
  if (!j.is_object()) throw FormatError(w + ": expected a JSON object");
  static const std::vector<std::string> known = {
      "variant",       "d",         "num_anchors", "d_ff",       "d_g",          "head_hidden",
      "short_window",  "ortho_mode", "lambda",     "learning_rate", "batch_size", "max_epochs",
      "patience",      "seed",      "max_history", "din_window", "gsu_r",        "int_k",
      "sid_levels",    "sid_codewords"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw FormatError(w + ": unknown field \"" + key + "\"");
  ModelConfig c;
  if (j.contains("variant")) c.variant = parse_variant(json_field<std::string>(j, "variant", w));
  c.d = json_field_or<size_t>(j, "d", c.d, w);
  c.num_anchors = json_field_or<size_t>(j, "num_anchors", c.num_anchors, w);
  c.d_ff = json_field_or<size_t>(j, "d_ff", c.d_ff, w);
  c.d_g = json_field_or<size_t>(j, "d_g", c.d_g, w);
  c.head_hidden = json_field_or<std::vector<size_t>>(j, "head_hidden", c.head_hidden, w);
  c.short_window = json_field_or<size_t>(j, "short_window", c.short_window, w);
  if (j.contains("ortho_mode"))
    c.ortho_mode = parse_ortho_mode(json_field<std::string>(j, "ortho_mode", w));
  c.lambda = json_field_or<double>(j, "lambda", c.lambda, w);
  c.learning_rate = json_field_or<double>(j, "learning_rate", c.learning_rate, w);
  c.batch_size = json_field_or<size_t>(j, "batch_size", c.batch_size, w);
  c.max_epochs = json_field_or<size_t>(j, "max_epochs", c.max_epochs, w);
  c.patience = json_field_or<size_t>(j, "patience", c.patience, w);
  c.seed = json_field_or<uint64_t>(j, "seed", c.seed, w);
  c.max_history = json_field_or<size_t>(j, "max_history", c.max_history, w);
  c.din_window = json_field_or<size_t>(j, "din_window", c.din_window, w);
  c.gsu_r = json_field_or<size_t>(j, "gsu_r", c.gsu_r, w);
  c.int_k = json_field_or<size_t>(j, "int_k", c.int_k, w);
  c.sid_levels = json_field_or<size_t>(j, "sid_levels", c.sid_levels, w);
  c.sid_codewords = json_field_or<size_t>(j, "sid_codewords", c.sid_codewords, w);
  c.validate();
  return c;
}

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(c.variant);
  j["d"] = c.d;
  j["num_anchors"] = c.num_anchors;
  j["d_ff"] = c.d_ff;
  j["d_g"] = c.d_g;
  j["head_hidden"] = c.head_hidden;
  j["short_window"] = c.short_window;
  j["ortho_mode"] = ortho_mode_name(c.ortho_mode);
  j["lambda"] = c.lambda;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["max_history"] = c.max_history;
  j["din_window"] = c.din_window;
  j["gsu_r"] = c.gsu_r;
  j["int_k"] = c.int_k;
  j["sid_levels"] = c.sid_levels;
  j["sid_codewords"] = c.sid_codewords;
  return j.dump();
}

}  // namespace uxsid::model
