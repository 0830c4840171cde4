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

#ifndef UXSID_SYNTHDATA_WORLD_H_
#define UXSID_SYNTHDATA_WORLD_H_

#include <cstdint>
#include <string>
#include <vector>

#include "uxsid/synthdata/dataset.h"

namespace uxsid::synthdata {

struct WorldConfig {
  size_t n_clusters = 32;
  size_t items_per_cluster = 100;
  size_t content_dim = 16;
  double cluster_spread = 0.2;
  size_t n_users = 2000;
  size_t interests_per_user = 3;
  size_t seq_len = 2000;
  // Positions [distal_begin, distal_end) hold the user's rarest interest,
  // which appears nowhere else in the sequence.
  size_t distal_begin = 0;
  size_t distal_end = 100;
  size_t impressions_per_user = 20;
  // Probability that an impression's target cluster is one of the user's
  // interests.
  double positive_rate = 0.5;
  double label_noise = 0.05;
  uint64_t seed = 1;

  void validate() const;
};

WorldConfig world_config_from_json(const std::string& text);
std::string world_config_to_json(const WorldConfig& config);

// Ground truth kept alongside the generated dataset.
struct UserTruth {
  std::vector<int32_t> interests;
  std::vector<double> weights;
  int32_t distal_cluster = -1;
};

struct World {
  Dataset dataset;
  std::vector<UserTruth> truth;
};

World generate_world(const WorldConfig& config, size_t threads = 1);
inline Dataset generate(const WorldConfig& config, size_t threads = 1) {
  return generate_world(config, threads).dataset;
}

// Best achievable AUC when the label depends only on whether the target's
// cluster is among the user's interests.
double bayes_auc(double positive_rate, double label_noise);

}  // namespace uxsid::synthdata

#endif  // UXSID_SYNTHDATA_WORLD_H_
