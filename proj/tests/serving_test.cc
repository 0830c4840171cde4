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

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"
#include "pipeline_util.h"
#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/rng.h"
#include "uxsid/serving/bench.h"
#include "uxsid/serving/precompute.h"
#include "uxsid/serving/store.h"

namespace uxsid::serving {
namespace {

namespace fs = std::filesystem;
using testing::small_model;
using testing::small_setup;

// Reference FNV-1a 64, written independently of the library version.
uint64_t reference_fnv(const std::vector<uint8_t>& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t constant_key(uint64_t, uint32_t) { return 42; }

TEST(MakeKey, GoldenVectors) {
  EXPECT_EQ(reference_fnv({'a'}), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(make_key(0, 0), reference_fnv(std::vector<uint8_t>(12, 0)));
  EXPECT_EQ(make_key(0x0102030405060708ULL, 0x0a0b0c0dU),
            reference_fnv({0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01, 0x0d, 0x0c, 0x0b, 0x0a}));
  EXPECT_EQ(make_key(77, 3), make_key(77, 3));
  EXPECT_NE(make_key(1, 0), make_key(0, 1));
}

TEST(MakeKey, NoCollisionsOverAMillionRandomPairs) {
  Rng rng(8);
  std::vector<uint64_t> keys(1000000);
  for (auto& k : keys) k = make_key(rng.next_u64(), static_cast<uint32_t>(rng.next_u64()));
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(std::adjacent_find(keys.begin(), keys.end()), keys.end());
}

std::vector<float> record(size_t d, float base) {
  std::vector<float> v(2 * d);
  for (size_t i = 0; i < v.size(); ++i) v[i] = base + static_cast<float>(i) * 0.25f;
  return v;
}

TEST(EmbeddingStore, LookupHitsMissesAndFreezeRules) {
  EmbeddingStore s(3, 99);
  s.insert(5, 1, record(3, 1.0f));
  s.insert(5, 2, record(3, 2.0f));
  EXPECT_THROW(s.find(5, 1), StateError);
  EXPECT_THROW(s.insert(5, 1, record(3, 0.0f)), InvalidArgument);
  EXPECT_THROW(s.insert(6, 1, std::vector<float>(5)), DimensionError);
  s.freeze();
  EXPECT_THROW(s.insert(7, 1, record(3, 0.0f)), StateError);
  const float* hit = s.find(5, 2);
  ASSERT_NE(hit, nullptr);
  EXPECT_TRUE(std::equal(hit, hit + 6, record(3, 2.0f).begin()));
  EXPECT_EQ(s.find(5, 3), nullptr);
  EXPECT_EQ(s.misses(), 0u);
  const auto zero = s.lookup_or_zero(9, 9);
  EXPECT_EQ(zero, numerics::Matrix(2, 3));
  EXPECT_EQ(s.misses(), 1u);
  EXPECT_EQ(s.lookup_or_zero(5, 1).values()[1], 1.25f);
  EXPECT_EQ(s.misses(), 1u);
}

TEST(EmbeddingStore, CollisionsKeepBothValues) {
  EmbeddingStore s(2, 0, &constant_key);
  for (uint32_t sid = 0; sid < 5; ++sid) s.insert(1, sid, record(2, static_cast<float>(sid)));
  EXPECT_THROW(s.insert(1, 3, record(2, 0.0f)), InvalidArgument);
  s.freeze();
  EXPECT_EQ(s.collisions(), 4u);
  for (uint32_t sid = 0; sid < 5; ++sid) EXPECT_EQ(s.find(1, sid)[0], static_cast<float>(sid));
  EXPECT_EQ(s.find(2, 0), nullptr);
  EXPECT_THROW(serialize_store(s), StateError);
}

TEST(EmbeddingStore, GrowsPastManyRecords) {
  EmbeddingStore s(1, 0);
  for (uint64_t u = 0; u < 5000; ++u) s.insert(u, static_cast<uint32_t>(u % 7), record(1, static_cast<float>(u)));
  s.freeze();
  for (uint64_t u = 0; u < 5000; ++u) ASSERT_EQ(s.find(u, static_cast<uint32_t>(u % 7))[0], static_cast<float>(u));
  EXPECT_EQ(s.find(3, 4), nullptr);
}

TEST(StoreIo, RoundTripIsByteExact) {
  EmbeddingStore s(2, 1234);
  for (uint64_t u = 0; u < 20; ++u) s.insert(u * 11, static_cast<uint32_t>(u % 3), record(2, float(u)));
  s.freeze();
  const auto bytes = serialize_store(s);
  const EmbeddingStore back = deserialize_store(bytes);
  EXPECT_EQ(back.size(), 20u);
  EXPECT_EQ(back.params_checksum(), 1234u);
  EXPECT_EQ(serialize_store(back), bytes);
  const auto path = (fs::temp_directory_path() / "uxsid_store_test.uxes").string();
  save_store(s, path);
  EXPECT_EQ(read_file_bytes(path), bytes);
  EXPECT_EQ(serialize_store(load_store(path)), bytes);
  fs::remove(path);
}

TEST(StoreIo, RejectsCorruption) {
  EmbeddingStore s(2, 1);
  s.insert(1, 1, record(2, 1.0f));
  s.insert(2, 1, record(2, 2.0f));
  s.freeze();
  const auto bytes = serialize_store(s);
  for (size_t cut : {size_t{3}, size_t{20}, bytes.size() - 1}) {
    std::vector<uint8_t> t(bytes.begin(), bytes.begin() + static_cast<ptrdiff_t>(cut));
    EXPECT_THROW(deserialize_store(t), FormatError) << cut;
  }
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_store(bad), FormatError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(deserialize_store(bad), FormatError);
  bad = bytes;
  bad[bytes.size() - 12] ^= 1;  // uid of the last record no longer matches its key
  EXPECT_THROW(deserialize_store(bad), FormatError);
  EXPECT_THROW(serialize_store(EmbeddingStore(2, 1)), StateError);
  EXPECT_THROW(load_store("/nonexistent/uxsid.uxes"), IoError);
}

TEST(Precompute, MatchesDirectEmbeddingAndIsScheduleIndependent) {
  const auto s = small_setup();
  const model::Model m = model::create_model(small_model(), s.vocab);
  const auto universe = sid_universe(m, s.data);
  const EmbeddingStore one = precompute(m, s.data, 1);
  const EmbeddingStore three = precompute(m, s.data, 3);
  EXPECT_TRUE(one.frozen());
  size_t expected = 0;
  for (const auto& u : universe) expected += u.size();
  EXPECT_EQ(one.size(), expected);
  EXPECT_EQ(serialize_store(one), serialize_store(three));

  for (size_t u : {size_t{0}, size_t{7}, s.data.histories.size() - 1}) {
    for (int32_t sid : universe[u]) {
      const auto direct = model::uxsid_embed(m, s.data.histories[u], sid).embedding;
      const float* cached = one.find(static_cast<uint64_t>(m.vocab.user_ids[u]), static_cast<uint32_t>(sid));
      ASSERT_NE(cached, nullptr);
      EXPECT_TRUE(std::equal(direct.values().begin(), direct.values().end(), cached));
    }
  }
}

TEST(Precompute, UniverseCoversHistoryAndCandidates) {
  const auto s = small_setup();
  const model::Model m = model::create_model(small_model(), s.vocab);
  const auto universe = sid_universe(m, s.data);
  for (const auto& e : s.data.test) {
    const auto& u = universe[static_cast<size_t>(e.user)];
    EXPECT_TRUE(std::binary_search(u.begin(), u.end(), m.vocab.item_sid[static_cast<size_t>(e.target)]));
  }
  for (const auto& u : universe) EXPECT_TRUE(std::is_sorted(u.begin(), u.end()));
}

TEST(Parity, ZeroDeviationAndChecksumGuard) {
  const auto s = small_setup();
  model::Model m = model::create_model(small_model(), s.vocab);
  const EmbeddingStore store = precompute(m, s.data, 2);
  const auto pairs = sample_pairs(store, 200, 4);
  EXPECT_EQ(pairs.size(), 200u);
  EXPECT_EQ(sample_pairs(store, 200, 4), pairs);
  EXPECT_EQ(sample_pairs(store, store.size() + 5, 4).size(), store.size());
  const ParityReport r = parity_check(store, m, s.data, pairs, 2);
  EXPECT_EQ(r.max_abs_deviation, 0.0);
  EXPECT_EQ(r.checked, 200u);
  EXPECT_TRUE(r.passed);

  const ParityReport reloaded = parity_check(deserialize_store(serialize_store(store)), m, s.data, pairs);
  EXPECT_EQ(reloaded.max_abs_deviation, 0.0);

  const std::vector<UidSid> absent{{123456789, 0}};
  EXPECT_FALSE(parity_check(store, m, s.data, absent).passed);

  m.params.params[0].value.values()[0] += 1e-3f;
  EXPECT_THROW(parity_check(store, m, s.data, pairs), StateError);
}

TEST(ServeScores, MatchFullForwardScores) {
  const auto s = small_setup();
  const model::Model m = model::create_model(small_model(), s.vocab);
  const EmbeddingStore store = precompute(m, s.data);
  const auto served = serve_scores(m, store, s.data, synthdata::Split::kTest);
  const auto full = trainer::evaluate(m, s.data, synthdata::Split::kTest).scores;
  ASSERT_EQ(served.size(), full.size());
  for (size_t i = 0; i < served.size(); ++i) EXPECT_EQ(served[i], full[i]) << i;
  EXPECT_EQ(store.misses(), 0u);
}

TEST(Bench, EmitsRowsForEveryLengthAndModel) {
  const auto s = small_setup();
  const model::Model m = model::create_model(small_model(), s.vocab);
  BenchOptions o;
  o.calls = 50;
  o.repeats = 2;
  o.gsu_r = 10;
  const std::vector<size_t> lengths{30, 300};
  const auto rows = bench_online_latency(m, lengths, o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].model, "uxsid_online");
  EXPECT_EQ(rows[3].model, "sim_soft_gsu");
  EXPECT_EQ(rows[3].length, 300u);
  for (const auto& r : rows) EXPECT_GT(r.mean_ns, 0.0);
  const std::vector<size_t> sizes{10, 100};
  const auto lookups = bench_store_lookup(sizes, 4, o);
  ASSERT_EQ(lookups.size(), 4u);
  EXPECT_EQ(lookups[1].model, "store_lookup_uniform");
  const auto csv = latency_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "length,mean_ns,p99_ns,model");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

}  // namespace
}  // namespace uxsid::serving
