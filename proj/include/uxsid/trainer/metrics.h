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

#ifndef UXSID_TRAINER_METRICS_H_
#define UXSID_TRAINER_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>

namespace uxsid::trainer {

// Mann-Whitney AUC with tied scores counted 1/2. Empty when either class is
// missing.
std::optional<double> eval_auc(std::span<const float> scores, std::span<const float> labels);

struct GroupedAuc {
  std::optional<double> uauc;   // unweighted mean over eligible users
  std::optional<double> wuauc;  // weighted by the user's impression count
  size_t eligible_users = 0;
};

// Users need both classes to count; others are left out of both sums.
GroupedAuc eval_grouped_auc(std::span<const float> scores, std::span<const float> labels,
                            std::span<const int64_t> user_ids);

inline std::optional<double> eval_uauc(std::span<const float> s, std::span<const float> l,
                                       std::span<const int64_t> u) {
  return eval_grouped_auc(s, l, u).uauc;
}
inline std::optional<double> eval_wuauc(std::span<const float> s, std::span<const float> l,
                                        std::span<const int64_t> u) {
  return eval_grouped_auc(s, l, u).wuauc;
}

// Share of the top-k behaviors by attention score whose SID equals
// target_sid, divided by min(k, L). Equal scores rank the earlier position
// first.
double interest_recall_at_k(std::span<const float> scores, std::span<const int32_t> seq_sids,
                            int32_t target_sid, size_t k);

}  // namespace uxsid::trainer

#endif  // UXSID_TRAINER_METRICS_H_
