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

#include "uxsid/serving/precompute.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "uxsid/common/error.h"
#include "uxsid/common/parallel.h"
#include "uxsid/common/rng.h"

namespace uxsid::serving {

namespace {

void check_uxsid(const model::Model& m) {
  if (m.config.variant != model::Variant::kUxsid) throw StateError("serving needs a uxsid model");
}

std::unordered_map<uint64_t, size_t> user_lookup(const model::Model& m) {
  std::unordered_map<uint64_t, size_t> out;
  for (size_t i = 0; i < m.vocab.user_ids.size(); ++i) out.emplace(static_cast<uint64_t>(m.vocab.user_ids[i]), i);
  return out;
}

}  // namespace

std::vector<std::vector<int32_t>> sid_universe(const model::Model& m, const trainer::BoundData& data) {
  std::vector<std::vector<int32_t>> out(data.histories.size());
  for (size_t u = 0; u < data.histories.size(); ++u)
    for (int32_t item : data.histories[u]) out[u].push_back(m.vocab.item_sid.at(static_cast<size_t>(item)));
  for (auto split : {synthdata::Split::kVal, synthdata::Split::kTest})
    for (const auto& e : data.split(split))
      out[static_cast<size_t>(e.user)].push_back(m.vocab.item_sid.at(static_cast<size_t>(e.target)));
  for (size_t u = 0; u < out.size(); ++u) {
    if (data.histories[u].empty()) {
      out[u].clear();
      continue;
    }
    std::sort(out[u].begin(), out[u].end());
    out[u].erase(std::unique(out[u].begin(), out[u].end()), out[u].end());
  }
  return out;
}

EmbeddingStore precompute(const model::Model& m, const trainer::BoundData& data, size_t threads) {
  check_uxsid(m);
  const auto universe = sid_universe(m, data);
  std::vector<std::vector<model::EmbedResult>> per_user(universe.size());
  parallel_for(universe.size(), threads, [&](size_t u) {
    if (universe[u].empty()) return;
    per_user[u] = model::uxsid_embed_many(m, data.histories[u], universe[u]);
  });
  EmbeddingStore store(m.config.d, model::params_checksum(m.params));
  for (size_t u = 0; u < universe.size(); ++u) {
    const uint64_t uid = static_cast<uint64_t>(m.vocab.user_ids[u]);
    for (size_t s = 0; s < universe[u].size(); ++s)
      store.insert(uid, static_cast<uint32_t>(universe[u][s]), per_user[u][s].embedding.values());
    per_user[u].clear();
  }
  store.freeze();
  return store;
}

std::vector<UidSid> sample_pairs(const EmbeddingStore& store, size_t n, uint64_t seed) {
  std::vector<size_t> idx(store.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  if (n < idx.size()) {
    Rng rng(seed);
    rng.shuffle(std::span<size_t>(idx));
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<UidSid> out;
  for (size_t i : idx) out.emplace_back(store.uid_at(i), store.sid_at(i));
  return out;
}

ParityReport parity_check(const EmbeddingStore& store, const model::Model& m, const trainer::BoundData& data,
                          std::span<const UidSid> pairs, size_t threads) {
  check_uxsid(m);
  if (!store.frozen()) throw StateError("parity check needs a frozen store");
  if (model::params_checksum(m.params) != store.params_checksum())
    throw StateError("parity check refused: model parameters differ from those the store was built with");
  if (store.d() != m.config.d) throw DimensionError("store d does not match the model");
  const auto users = user_lookup(m);
  std::vector<double> dev(pairs.size(), 0.0);
  std::vector<char> miss(pairs.size(), 0);
  parallel_for(pairs.size(), threads, [&](size_t i) {
    const float* cached = store.find(pairs[i].first, pairs[i].second);
    auto u = users.find(pairs[i].first);
    if (cached == nullptr || u == users.end()) {
      miss[i] = 1;
      return;
    }
    const auto fresh = model::uxsid_embed(m, data.histories.at(u->second), static_cast<int32_t>(pairs[i].second));
    double worst = 0;
    for (size_t k = 0; k < fresh.embedding.size(); ++k)
      worst = std::max(worst, std::abs(double(fresh.embedding.values()[k]) - double(cached[k])));
    dev[i] = worst;
  });
  ParityReport report;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (miss[i]) {
      ++report.misses;
      continue;
    }
    ++report.checked;
    report.max_abs_deviation = std::max(report.max_abs_deviation, dev[i]);
  }
  report.passed = report.misses == 0 && report.max_abs_deviation <= 1e-6;
  return report;
}

std::vector<float> serve_scores(const model::Model& m, const EmbeddingStore& store,
                                const trainer::BoundData& data, synthdata::Split split) {
  check_uxsid(m);
  const auto& examples = data.split(split);
  std::vector<float> out(examples.size(), std::numeric_limits<float>::quiet_NaN());
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (e.history_len == 0) continue;
    const auto& hist = data.histories.at(static_cast<size_t>(e.user));
    const uint64_t uid = static_cast<uint64_t>(m.vocab.user_ids[static_cast<size_t>(e.user)]);
    const uint32_t sid = static_cast<uint32_t>(m.vocab.item_sid[static_cast<size_t>(e.target)]);
    const numerics::Matrix cached = store.lookup_or_zero(uid, sid);
    out[i] = model::predict_from_cache(m, e.user, std::span<const int32_t>(hist.data(), e.history_len),
                                       std::span<const int32_t>(&e.target, 1),
                                       std::span<const numerics::Matrix>(&cached, 1))[0];
  }
  return out;
}

}  // namespace uxsid::serving
