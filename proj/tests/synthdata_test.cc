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

#include <filesystem>
#include <set>

#include "gtest/gtest.h"
#include "uxsid/common/binary_io.h"
#include "uxsid/synthdata/dataset.h"
#include "uxsid/synthdata/world.h"

namespace uxsid::synthdata {
namespace {

namespace fs = std::filesystem;

WorldConfig small_config() {
  WorldConfig c;
  c.n_clusters = 8;
  c.items_per_cluster = 10;
  c.content_dim = 4;
  c.n_users = 40;
  c.seq_len = 200;
  c.distal_begin = 0;
  c.distal_end = 10;
  c.seed = 11;
  return c;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("uxsid_" + name);
  fs::remove_all(p);
  return p;
}

TEST(BayesAuc, ClosedForm) {
  EXPECT_DOUBLE_EQ(bayes_auc(0.5, 0.0), 1.0);
  // With eps = 0.5 the label ignores the target entirely.
  EXPECT_DOUBLE_EQ(bayes_auc(0.5, 0.5), 0.5);
  // pi=0.5, eps=0.1: a=.45 b=.05 c=.05 e=.45 -> (.2025 + .5*(.0225+.0225)) / .25
  EXPECT_NEAR(bayes_auc(0.5, 0.1), 0.9, 1e-12);
}

TEST(Generate, NoiselessLabelsFollowInterests) {
  auto c = small_config();
  c.label_noise = 0.0;
  World w = generate_world(c);
  size_t checked = 0;
  for (const auto* split : {&w.dataset.train, &w.dataset.val, &w.dataset.test}) {
    for (const Example& e : *split) {
      const int32_t cluster = w.dataset.items[e.target].category;
      const auto& interests = w.truth[e.user].interests;
      const bool in = std::find(interests.begin(), interests.end(), cluster) != interests.end();
      EXPECT_EQ(e.label, in ? 1.0f : 0.0f);
      ++checked;
    }
  }
  EXPECT_EQ(checked, c.n_users * c.impressions_per_user);
}

TEST(Generate, DistalClusterOnlyInsideWindow) {
  auto c = small_config();
  c.seq_len = 2000;
  c.distal_begin = 0;
  c.distal_end = 100;  // first 5% of the sequence
  c.n_users = 25;
  World w = generate_world(c);
  const size_t truncation = 100;
  for (size_t u = 0; u < c.n_users; ++u) {
    const auto& rec = w.dataset.users[u];
    const int32_t distal = w.truth[u].distal_cluster;
    ASSERT_GE(distal, 0);
    for (size_t pos = 0; pos < rec.items.size(); ++pos) {
      const bool is_distal = w.dataset.items[rec.items[pos]].category == distal;
      EXPECT_EQ(is_distal, pos < 100) << "user " << u << " pos " << pos;
    }
    // The last `truncation` behaviors never show the planted cluster.
    for (size_t pos = rec.items.size() - truncation; pos < rec.items.size(); ++pos)
      EXPECT_NE(w.dataset.items[rec.items[pos]].category, distal);
    EXPECT_LE(c.distal_end, rec.items.size() - truncation);
  }
}

TEST(Generate, SplitsAreTimeOrderedAndDisjoint) {
  auto c = small_config();
  World w = generate_world(c);
  const auto& ds = w.dataset;
  EXPECT_EQ(ds.train.size(), c.n_users * 14);
  EXPECT_EQ(ds.val.size(), c.n_users * 3);
  EXPECT_EQ(ds.test.size(), c.n_users * 3);
  std::vector<int64_t> last_train(c.n_users, -1), first_val(c.n_users, 1 << 30);
  for (const auto& e : ds.train) last_train[e.user] = std::max(last_train[e.user], e.ts);
  for (const auto& e : ds.val) first_val[e.user] = std::min<int64_t>(first_val[e.user], e.ts);
  for (size_t u = 0; u < c.n_users; ++u) EXPECT_LT(last_train[u], first_val[u]);
  for (const auto& e : ds.test) EXPECT_EQ(e.history_len, c.seq_len);
}

TEST(Generate, DeterministicAndThreadIndependent) {
  auto c = small_config();
  auto a = dataset_fingerprint_bytes(generate(c, 1));
  auto b = dataset_fingerprint_bytes(generate(c, 4));
  EXPECT_EQ(a, b);
  c.seed += 1;
  EXPECT_NE(dataset_fingerprint_bytes(generate(c)), a);
}

TEST(Generate, RejectsInconsistentConfig) {
  auto c = small_config();
  c.label_noise = 0.5;
  EXPECT_THROW(generate(c), InvalidArgument);
  c = small_config();
  c.distal_end = c.seq_len + 1;
  EXPECT_THROW(generate(c), InvalidArgument);
  c = small_config();
  c.interests_per_user = 1;
  EXPECT_THROW(generate(c), InvalidArgument);
  EXPECT_THROW(world_config_from_json("{\"n_users\": 3, \"bogus\": 1}"), FormatError);
}

TEST(Generate, ConfigJsonRoundTrip) {
  auto c = small_config();
  c.cluster_spread = 0.123;
  auto back = world_config_from_json(world_config_to_json(c));
  EXPECT_EQ(world_config_to_json(back), world_config_to_json(c));
}

TEST(DatasetIo, SaveLoadRoundTripIsByteEqual) {
  Dataset ds = generate(small_config());
  const auto dir = temp_dir("ds_roundtrip");
  save_dataset(ds, dir.string());
  Dataset loaded = load_dataset(dir.string());
  EXPECT_EQ(dataset_fingerprint_bytes(loaded), dataset_fingerprint_bytes(ds));
  EXPECT_DOUBLE_EQ(loaded.bayes_auc, ds.bayes_auc);
  // Saving the loaded copy reproduces identical files.
  const auto dir2 = temp_dir("ds_roundtrip2");
  save_dataset(loaded, dir2.string());
  for (const char* f : {"items.jsonl", "interactions.jsonl", "meta.json"})
    EXPECT_EQ(read_file_bytes((dir / f).string()), read_file_bytes((dir2 / f).string())) << f;
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(DatasetIo, LeaveLastOutSplits) {
  const auto dir = temp_dir("ds_llo");
  fs::create_directories(dir);
  write_file_atomic((dir / "items.jsonl").string(),
                    std::string("{\"item_id\":5,\"vector\":[1,0],\"category\":0}\n"
                                "{\"item_id\":6,\"vector\":[0,1],\"category\":1}\n"));
  write_file_atomic((dir / "interactions.jsonl").string(),
                    std::string("{\"user_id\":9,\"item_id\":6,\"ts\":30,\"label\":1}\n"
                                "{\"user_id\":9,\"item_id\":5,\"ts\":10,\"label\":0}\n"
                                "{\"user_id\":9,\"item_id\":5,\"ts\":20,\"label\":1}\n"));
  Dataset ds = load_dataset(dir.string());
  ASSERT_EQ(ds.users.size(), 1u);
  EXPECT_EQ(ds.users[0].ts, (std::vector<int64_t>{10, 20, 30}));
  ASSERT_EQ(ds.train.size(), 1u);
  ASSERT_EQ(ds.val.size(), 1u);
  ASSERT_EQ(ds.test.size(), 1u);
  EXPECT_EQ(ds.train[0].history_len, 0u);
  EXPECT_EQ(ds.val[0].history_len, 1u);
  EXPECT_EQ(ds.test[0].history_len, 2u);
  EXPECT_EQ(ds.items[ds.test[0].target].item_id, 6);
  fs::remove_all(dir);
}

TEST(DatasetIo, MalformedInputsReportLine) {
  const auto dir = temp_dir("ds_bad");
  fs::create_directories(dir);
  write_file_atomic((dir / "items.jsonl").string(),
                    std::string("{\"item_id\":5,\"vector\":[1,0],\"category\":0}\n"));
  write_file_atomic((dir / "interactions.jsonl").string(), std::string());
  EXPECT_THROW(load_dataset(dir.string()), FormatError);
  write_file_atomic((dir / "interactions.jsonl").string(),
                    std::string("{\"user_id\":1,\"item_id\":5,\"ts\":1,\"label\":1}\n{\"user_id\":1}\n"));
  try {
    load_dataset(dir.string());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("interactions.jsonl:2"), std::string::npos) << e.what();
  }
  write_file_atomic((dir / "interactions.jsonl").string(),
                    std::string("{\"user_id\":1,\"item_id\":77,\"ts\":1,\"label\":1}\n"));
  EXPECT_THROW(load_dataset(dir.string()), FormatError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace uxsid::synthdata
