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

#ifndef UXSID_SERVING_PRECOMPUTE_H_
#define UXSID_SERVING_PRECOMPUTE_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "uxsid/model/model.h"
#include "uxsid/serving/store.h"
#include "uxsid/trainer/trainer.h"

namespace uxsid::serving {

// Sorted first-layer SIDs per model user: those in the behavior sequence plus
// the targets of the user's val/test impressions. Users without behaviors get
// an empty list.
std::vector<std::vector<int32_t>> sid_universe(const model::Model& m, const trainer::BoundData& data);

// E^UxSID for every (user, sid) of the universe over the user's full
// sequence. Users are processed in parallel and merged in user order, so the
// store is identical for any thread count. Returned frozen.
EmbeddingStore precompute(const model::Model& m, const trainer::BoundData& data, size_t threads = 1);

using UidSid = std::pair<uint64_t, uint32_t>;

// n distinct stored pairs chosen by a seeded shuffle (all when n >= size),
// in store order.
std::vector<UidSid> sample_pairs(const EmbeddingStore& store, size_t n, uint64_t seed);

struct ParityReport {
  double max_abs_deviation = 0;
  size_t checked = 0;
  size_t misses = 0;
  bool passed = false;  // max_abs_deviation <= 1e-6 and no misses
};

// Recomputes each sampled pair through the single-SID path and compares it
// with the cached record. Refused with StateError when the model's parameter
// checksum differs from the one the store was built with.
ParityReport parity_check(const EmbeddingStore& store, const model::Model& m, const trainer::BoundData& data,
                          std::span<const UidSid> pairs, size_t threads = 1);

// Impression probabilities served from the store (zero records on a miss),
// aligned with data.split(split); NaN for empty-history impressions.
std::vector<float> serve_scores(const model::Model& m, const EmbeddingStore& store,
                                const trainer::BoundData& data, synthdata::Split split);

}  // namespace uxsid::serving

#endif  // UXSID_SERVING_PRECOMPUTE_H_
