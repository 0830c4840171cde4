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

#include "uxsid/serving/bench.h"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "uxsid/baselines/retrieval.h"
#include "uxsid/common/error.h"
#include "uxsid/common/rng.h"
#include "uxsid/serving/store.h"

namespace uxsid::serving {

namespace {

using Clock = std::chrono::steady_clock;

constexpr size_t kTargets = 64;
constexpr size_t kChunk = 250;
constexpr size_t kHotKeys = 1024;

// Keeps results observable so timed calls are not optimized away.
volatile float g_sink = 0;

struct Samples {
  std::vector<double> repeat_means;
  std::vector<double> calls;

  void add_repeat(const std::vector<double>& ns) {
    double s = 0;
    for (double v : ns) s += v;
    repeat_means.push_back(s / static_cast<double>(ns.size()));
    calls.insert(calls.end(), ns.begin(), ns.end());
  }

  LatencyRow row(size_t length, std::string model) {
    std::sort(repeat_means.begin(), repeat_means.end());
    std::sort(calls.begin(), calls.end());
    LatencyRow r;
    r.length = length;
    r.mean_ns = repeat_means[repeat_means.size() / 2];
    r.p99_ns = calls[std::min(calls.size() - 1, static_cast<size_t>(0.99 * static_cast<double>(calls.size())))];
    r.model = std::move(model);
    return r;
  }
};

template <typename F>
std::vector<double> time_calls(size_t calls, F&& f) {
  std::vector<double> ns(calls);
  for (size_t i = 0; i < calls; ++i) {
    const auto t0 = Clock::now();
    f(i);
    ns[i] = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
  }
  return ns;
}

void check_options(const BenchOptions& o) {
  if (o.calls == 0 || o.repeats == 0 || o.gsu_r == 0) throw InvalidArgument("benchmark counts must be >= 1");
}

}  // namespace

std::vector<LatencyRow> bench_online_latency(const model::Model& m, std::span<const size_t> lengths,
                                             const BenchOptions& options) {
  check_options(options);
  if (m.config.variant != model::Variant::kUxsid) throw StateError("bench-latency needs a uxsid model");
  const size_t n_items = m.vocab.num_items();
  const size_t d = m.config.d;
  const auto& table = m.params.at(m.params.idx.item_emb).value;

  struct Case {
    std::vector<int32_t> targets;
    std::vector<numerics::Matrix> cached;
    numerics::Matrix seq_embs;
    std::vector<std::vector<float>> target_embs;
  };
  std::vector<Case> cases;
  for (size_t li = 0; li < lengths.size(); ++li) {
    if (lengths[li] == 0) throw InvalidArgument("benchmark lengths must be >= 1");
    Rng rng(derive_seed(options.seed, li));
    std::vector<int32_t> history(lengths[li]);
    for (auto& x : history) x = static_cast<int32_t>(rng.below(n_items));
    Case c;
    std::vector<int32_t> sids;
    for (size_t t = 0; t < kTargets; ++t) {
      c.targets.push_back(static_cast<int32_t>(rng.below(n_items)));
      sids.push_back(m.vocab.item_sid[static_cast<size_t>(c.targets.back())]);
      const auto row = table.row(static_cast<size_t>(c.targets.back()));
      c.target_embs.emplace_back(row.begin(), row.end());
    }
    for (auto& e : model::uxsid_embed_many(m, history, sids)) c.cached.push_back(std::move(e.embedding));
    c.seq_embs = numerics::Matrix(history.size(), d);
    for (size_t p = 0; p < history.size(); ++p) {
      const auto row = table.row(static_cast<size_t>(history[p]));
      std::copy(row.begin(), row.end(), c.seq_embs.row(p).begin());
    }
    cases.push_back(std::move(c));
  }

  // Online calls for all lengths are interleaved in short chunks so drift
  // and cache state hit every length alike; GSU runs in its own phase because
  // its large scans evict the online working set.
  auto online_call = [&](const Case& c, size_t i) {
    const size_t t = i % kTargets;
    g_sink = g_sink + model::online_rank(m, c.targets[t], c.cached[t]).values()[0];
  };
  for (const Case& c : cases)
    for (size_t i = 0; i < kTargets; ++i) online_call(c, i);
  std::vector<Samples> online(lengths.size()), gsu(lengths.size());
  for (size_t rep = 0; rep < options.repeats; ++rep) {
    std::vector<std::vector<double>> ns(lengths.size());
    for (size_t begin = 0; begin < options.calls; begin += kChunk) {
      const size_t n = std::min(kChunk, options.calls - begin);
      for (size_t k = 0; k < lengths.size(); ++k) {
        const size_t li = (rep + k) % lengths.size();
        const auto part = time_calls(n, [&](size_t i) { online_call(cases[li], begin + i); });
        ns[li].insert(ns[li].end(), part.begin(), part.end());
      }
    }
    for (size_t li = 0; li < lengths.size(); ++li) online[li].add_repeat(ns[li]);
  }
  for (size_t rep = 0; rep < options.repeats; ++rep) {
    for (size_t li = 0; li < lengths.size(); ++li) {
      const Case& c = cases[li];
      gsu[li].add_repeat(time_calls(options.calls, [&](size_t i) {
        const auto r = baselines::gsu_soft<float>(c.seq_embs, c.target_embs[i % kTargets], options.gsu_r);
        g_sink = g_sink + r.scores[0];
      }));
    }
  }
  std::vector<LatencyRow> rows;
  for (size_t li = 0; li < lengths.size(); ++li) rows.push_back(online[li].row(lengths[li], "uxsid_online"));
  for (size_t li = 0; li < lengths.size(); ++li) rows.push_back(gsu[li].row(lengths[li], "sim_soft_gsu"));
  return rows;
}

std::vector<LatencyRow> bench_store_lookup(std::span<const size_t> sizes, size_t d, const BenchOptions& options) {
  check_options(options);
  std::vector<LatencyRow> rows;
  for (size_t si = 0; si < sizes.size(); ++si) {
    if (sizes[si] == 0) throw InvalidArgument("store sizes must be >= 1");
    Rng rng(derive_seed(options.seed, 0x5700 + si));
    EmbeddingStore store(d, 0);
    std::vector<float> values(2 * d);
    for (size_t i = 0; i < sizes[si]; ++i) {
      for (auto& v : values) v = static_cast<float>(rng.uniform());
      store.insert(i / 64, static_cast<uint32_t>(i % 64), values);
    }
    store.freeze();
    // Hot rows probe a fixed set of kHotKeys stored pairs, the same working
    // set at every size, which isolates the hash-table cost. Uniform rows draw
    // from the whole store and so also pay for cache misses.
    std::vector<size_t> hot(std::min(kHotKeys, sizes[si]));
    for (auto& h : hot) h = rng.below(sizes[si]);
    std::vector<size_t> hot_probes(options.calls), uniform_probes(options.calls);
    for (auto& p : hot_probes) p = hot[rng.below(hot.size())];
    for (auto& p : uniform_probes) p = rng.below(sizes[si]);
    Samples hot_samples, uniform_samples;
    for (size_t rep = 0; rep < options.repeats; ++rep) {
      for (auto [probes, samples] : {std::pair{&hot_probes, &hot_samples}, std::pair{&uniform_probes, &uniform_samples}}) {
        samples->add_repeat(time_calls(options.calls, [&](size_t i) {
          const size_t k = (*probes)[i];
          g_sink = g_sink + store.find(k / 64, static_cast<uint32_t>(k % 64))[0];
        }));
      }
    }
    rows.push_back(hot_samples.row(sizes[si], "store_lookup"));
    rows.push_back(uniform_samples.row(sizes[si], "store_lookup_uniform"));
  }
  return rows;
}

std::string latency_csv(std::span<const LatencyRow> rows) {
  std::string out = "length,mean_ns,p99_ns,model\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.1f,%.1f,", r.length, r.mean_ns, r.p99_ns);
    out += buf + r.model + "\n";
  }
  return out;
}

}  // namespace uxsid::serving
