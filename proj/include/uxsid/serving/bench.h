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

#ifndef UXSID_SERVING_BENCH_H_
#define UXSID_SERVING_BENCH_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uxsid/model/model.h"

namespace uxsid::serving {

struct LatencyRow {
  size_t length = 0;  // sequence length, or store size for store_lookup rows
  double mean_ns = 0;
  double p99_ns = 0;
  std::string model;
};

struct BenchOptions {
  size_t calls = 10000;   // timed calls per length and repeat
  size_t repeats = 5;     // lengths are interleaved across repeats
  size_t gsu_r = 100;
  uint64_t seed = 1;
};

// Per-impression online cost at each sequence length. Emits "uxsid_online"
// rows (online_rank over a record cached from a length-L sequence) and
// "sim_soft_gsu" rows (inner-product top-r over the L behavior embeddings).
// mean_ns is the median over repeats of the per-repeat mean.
std::vector<LatencyRow> bench_online_latency(const model::Model& m, std::span<const size_t> lengths,
                                             const BenchOptions& options);

// find() on frozen stores of the given sizes. "store_lookup" rows probe the
// same number of hot keys at every size; "store_lookup_uniform" rows probe
// keys drawn from the whole store.
std::vector<LatencyRow> bench_store_lookup(std::span<const size_t> sizes, size_t d, const BenchOptions& options);

// CSV with header length,mean_ns,p99_ns,model.
std::string latency_csv(std::span<const LatencyRow> rows);

}  // namespace uxsid::serving

#endif  // UXSID_SERVING_BENCH_H_
