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

#include "uxsid/trainer/metrics.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "uxsid/common/error.h"

namespace uxsid::trainer {

std::optional<double> eval_auc(std::span<const float> scores, std::span<const float> labels) {
  if (scores.size() != labels.size()) throw DimensionError("eval_auc: scores/labels length mismatch");
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double pos = 0, neg = 0, rank_sum = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5f) {
        pos += 1;
        rank_sum += avg_rank;
      } else {
        neg += 1;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

GroupedAuc eval_grouped_auc(std::span<const float> scores, std::span<const float> labels,
                            std::span<const int64_t> user_ids) {
  if (scores.size() != labels.size() || scores.size() != user_ids.size())
    throw DimensionError("eval_grouped_auc: input length mismatch");
  std::map<int64_t, std::vector<size_t>> by_user;
  for (size_t i = 0; i < user_ids.size(); ++i) by_user[user_ids[i]].push_back(i);
  GroupedAuc out;
  double sum = 0, weighted = 0, weight = 0;
  std::vector<float> s, l;
  for (const auto& [user, rows] : by_user) {
    s.clear();
    l.clear();
    for (size_t i : rows) {
      s.push_back(scores[i]);
      l.push_back(labels[i]);
    }
    const auto auc = eval_auc(s, l);
    if (!auc) continue;
    ++out.eligible_users;
    sum += *auc;
    weighted += *auc * static_cast<double>(rows.size());
    weight += static_cast<double>(rows.size());
  }
  if (out.eligible_users > 0) {
    out.uauc = sum / static_cast<double>(out.eligible_users);
    out.wuauc = weighted / weight;
  }
  return out;
}

double interest_recall_at_k(std::span<const float> scores, std::span<const int32_t> seq_sids,
                            int32_t target_sid, size_t k) {
  if (scores.size() != seq_sids.size()) throw DimensionError("interest_recall_at_k: length mismatch");
  if (k == 0) throw InvalidArgument("interest_recall_at_k: k must be >= 1");
  if (scores.empty()) throw InvalidArgument("interest_recall_at_k: empty trace");
  const size_t top = std::min(k, scores.size());
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<ptrdiff_t>(top), order.end(),
                    [&](size_t a, size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  size_t hits = 0;
  for (size_t i = 0; i < top; ++i)
    if (seq_sids[order[i]] == target_sid) ++hits;
  return static_cast<double>(hits) / static_cast<double>(top);
}

}  // namespace uxsid::trainer
