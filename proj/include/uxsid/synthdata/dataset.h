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

#ifndef UXSID_SYNTHDATA_DATASET_H_
#define UXSID_SYNTHDATA_DATASET_H_

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "uxsid/sidgen/codebook.h"

namespace uxsid::synthdata {

using sidgen::ContentVector;

// One user's time-ordered behaviors, as indices into Dataset::items.
struct UserRecord {
  int64_t user_id = 0;
  std::vector<int32_t> items;
  std::vector<int64_t> ts;
};

// An impression scored against the first `history_len` behaviors of a user.
struct Example {
  int32_t user = 0;
  uint32_t history_len = 0;
  int32_t target = 0;
  float label = 0.0f;
  int64_t ts = 0;
};

struct Dataset {
  std::vector<ContentVector> items;
  std::vector<UserRecord> users;
  std::vector<Example> train, val, test;
  // Free-form metadata (config echo, Bayes AUC) written to meta.json.
  std::string meta_json = "{}";
  double bayes_auc = std::numeric_limits<double>::quiet_NaN();

  std::unordered_map<int64_t, int32_t> item_index() const;
};

enum class Split { kTrain, kVal, kTest };
const std::vector<Example>& split_examples(const Dataset& ds, Split split);

// Writes items.jsonl, interactions.jsonl and meta.json into `dir`.
void save_dataset(const Dataset& ds, const std::string& dir);

// Reads a dataset directory. Interaction lines carrying a "split" field
// (history/train/val/test) are used as given; otherwise every interaction is
// a behavior and the last two per user become the test and validation
// impressions (leave-last-out), the rest training impressions, each scored
// against its prefix.
Dataset load_dataset(const std::string& dir);

// Canonical byte image used for equality checks and checksums.
std::vector<uint8_t> dataset_fingerprint_bytes(const Dataset& ds);

}  // namespace uxsid::synthdata

#endif  // UXSID_SYNTHDATA_DATASET_H_
