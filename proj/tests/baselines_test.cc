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
#include <numeric>

#include "gtest/gtest.h"
#include "pipeline_util.h"
#include "test_util.h"
#include "uxsid/baselines/attention.h"
#include "uxsid/baselines/compare.h"
#include "uxsid/baselines/retrieval.h"
#include "uxsid/common/error.h"
#include "uxsid/common/rng.h"
#include "uxsid/numerics/kernels.h"

namespace uxsid::baselines {
namespace {

using numerics::Matrix;
using testing::small_model;
using testing::small_setup;

TEST(GsuHard, RecentMatchesInTimeOrder) {
  const std::vector<int32_t> cats{1, 2, 1, 3, 1, 1, 2};
  const auto r = gsu_hard(cats, 1, 2);
  EXPECT_EQ(r.positions, (std::vector<int32_t>{4, 5}));
  EXPECT_EQ(gsu_hard(cats, 1, 10).positions, (std::vector<int32_t>{0, 2, 4, 5}));
  EXPECT_TRUE(gsu_hard(cats, 9, 5).positions.empty());
  const std::vector<int32_t> same(10, 4);
  EXPECT_EQ(gsu_hard(same, 4, 3).positions, (std::vector<int32_t>{7, 8, 9}));
  EXPECT_THROW(gsu_hard(cats, 1, 0), InvalidArgument);
}

TEST(GsuSoft, MatchesFullSortOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.below(200), r = 1 + rng.below(60);
    Matrix e = testing::random_matrix<float>(n, 6, rng, 1.0f);
    // Repeated rows force score ties.
    for (size_t i = 1; i < n; i += 7) std::copy(e.row(0).begin(), e.row(0).end(), e.row(i).begin());
    Matrix q = testing::random_matrix<float>(1, 6, rng, 1.0f);
    std::vector<float> s(n);
    for (size_t i = 0; i < n; ++i) s[i] = numerics::dot<float>(e.row(i), q.row(0));
    std::vector<int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
      return s[a] != s[b] ? s[a] > s[b] : a > b;
    });
    order.resize(std::min(n, r));
    const auto got = gsu_soft<float>(e, q.row(0), r);
    ASSERT_EQ(got.positions, order) << trial;
    for (size_t i = 0; i < order.size(); ++i) EXPECT_EQ(got.scores[i], s[order[i]]);
  }
}

TEST(GsuSoft, AlignedItemFirstAndWholeSequenceWhenRLarge) {
  Matrix e(4, 4);
  for (size_t i = 0; i < 4; ++i) e(i, i) = 1.0f;
  const std::vector<float> q{0, 0, 2, 0};
  const auto r = gsu_soft<float>(e, q, 10);
  ASSERT_EQ(r.positions.size(), 4u);
  EXPECT_EQ(r.positions[0], 2);
  EXPECT_EQ(r.positions[1], 3);  // remaining zeros tie; most recent first
  EXPECT_TRUE(std::is_sorted(r.scores.rbegin(), r.scores.rend()));
}

class AttentionFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    setup_ = small_setup();
    model_ = model::create_model(small_model(model::Variant::kDin), setup_.vocab);
  }
  testing::SmallSetup setup_;
  model::Model model_;
};

TEST_F(AttentionFixture, TruncationReadsOnlyTheWindow) {
  const auto& h = setup_.data.histories[0];
  ASSERT_GT(h.size(), 30u);
  const int32_t target = 3;
  const Matrix full = truncated_target_attention(model_, std::span(h).last(20), target, 20);
  EXPECT_EQ(truncated_target_attention(model_, std::span(h).last(20), target, 50), full);
  std::vector<int32_t> changed = h;
  for (size_t i = 0; i + 20 < changed.size(); ++i) changed[i] = static_cast<int32_t>((changed[i] + 5) % 160);
  EXPECT_EQ(truncated_target_attention(model_, h, target, 20), truncated_target_attention(model_, changed, target, 20));
  EXPECT_THROW(truncated_target_attention(model_, {}, target, 20), InvalidArgument);
  EXPECT_THROW(truncated_target_attention(model_, h, target, 0), InvalidArgument);
}

TEST_F(AttentionFixture, EsuEdgeCases) {
  const auto& h = setup_.data.histories[1];
  const int32_t target = 7;
  RetrievedSubsequence last;
  for (size_t i = h.size() - 15; i < h.size(); ++i) last.positions.push_back(static_cast<int32_t>(i));
  EXPECT_EQ(esu_attention(model_, h, last, target).value, truncated_target_attention(model_, h, target, 15));

  const auto empty = esu_attention(model_, h, RetrievedSubsequence{}, target);
  EXPECT_TRUE(empty.empty);
  EXPECT_EQ(empty.value, Matrix(1, model_.config.d));

  RetrievedSubsequence one{{4}, {1.0f}}, twice{{4, 4}, {1.0f, 1.0f}};
  const Matrix a = esu_attention(model_, h, one, target).value;
  const Matrix b = esu_attention(model_, h, twice, target).value;
  for (size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.values()[k], b.values()[k], 1e-6f);

  // A single retrieved item yields its value projection.
  const auto& x = model_.params.idx;
  const auto& emb = model_.params.at(x.item_emb).value;
  const auto& wv = model_.params.at(x.att_wv).value;
  for (size_t j = 0; j < wv.cols(); ++j) {
    double v = 0;
    for (size_t k = 0; k < wv.rows(); ++k) v += double(emb(static_cast<size_t>(h[4]), k)) * wv(k, j);
    EXPECT_NEAR(a(0, j), v, 1e-5);
  }
  RetrievedSubsequence bad{{static_cast<int32_t>(h.size())}, {1.0f}};
  EXPECT_THROW(esu_attention(model_, h, bad, target), InvalidArgument);
}

TEST(Compare, OneRowPerLengthAndVariant) {
  const auto s = small_setup();
  sidgen::CodebookOptions co;
  co.levels = 2;
  co.codewords = 8;
  co.seed = 2;
  const auto cb = sidgen::train_codebooks(sidgen::stack_vectors(s.ds.items), co);
  CompareOptions o;
  o.lengths = {20, 120};
  o.variants = {model::Variant::kUxsid, model::Variant::kDin};
  o.base = small_model();
  o.base.max_epochs = 2;
  size_t seen = 0;
  o.on_row = [&](const CompareRow&) { ++seen; };
  const auto rows = compare_baselines(s.ds, cb, o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(seen, 4u);
  EXPECT_EQ(rows[1].length, 20u);
  EXPECT_EQ(rows[1].variant, model::Variant::kDin);
  for (const auto& r : rows) EXPECT_TRUE(r.auc.has_value());
  const auto csv = compare_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "length,model,test_auc,test_uauc,test_wuauc,best_epoch");
  EXPECT_NE(csv.find("\n120,uxsid,"), std::string::npos);
  EXPECT_EQ(compare_csv(compare_baselines(s.ds, cb, o)), csv);
}

}  // namespace
}  // namespace uxsid::baselines
