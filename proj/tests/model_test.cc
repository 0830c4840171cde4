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
#include <cmath>
#include <filesystem>
#include <numeric>

#include "gtest/gtest.h"
#include "test_util.h"
#include "uxsid/model/model.h"
#include "uxsid/numerics/grad_check.h"
#include "uxsid/numerics/kernels.h"

namespace uxsid::model {
namespace {

namespace ad = numerics::ad;
using numerics::MatrixD;
using testing::random_matrix;

Vocab tiny_vocab(size_t items = 40, size_t sids = 6, size_t users = 5) {
  Vocab v;
  for (size_t i = 0; i < items; ++i) {
    v.item_ids.push_back(static_cast<int64_t>(100 + i));
    v.item_sid.push_back(static_cast<int32_t>(i % sids));
    v.item_category.push_back(static_cast<int32_t>(i % 4));
  }
  for (size_t u = 0; u < users; ++u) v.user_ids.push_back(static_cast<int64_t>(u * 3));
  v.num_sids = sids;
  return v;
}

ModelConfig small_config(Variant variant = Variant::kUxsid) {
  ModelConfig c;
  c.variant = variant;
  c.d = 8;
  c.num_anchors = 4;
  c.d_ff = 16;
  c.d_g = 8;
  c.head_hidden = {12, 6};
  c.seed = 5;
  return c;
}

std::vector<int32_t> random_history(size_t len, size_t items, uint64_t seed) {
  Rng rng(seed);
  std::vector<int32_t> h(len);
  for (auto& x : h) x = static_cast<int32_t>(rng.below(items));
  return h;
}

// Evaluates a model-level function on a fresh non-recording tape.
template <typename F>
Matrix eval(const Model& m, F&& f) {
  Tape<float> tape;
  Net<float> net(tape, m.params);
  return tape.value(f(tape, net));
}

Matrix rows_of(const Model& m, const std::vector<int32_t>& items) {
  Matrix e(items.size(), m.config.d);
  const auto& table = m.params.at(m.params.idx.item_emb).value;
  for (size_t i = 0; i < items.size(); ++i)
    std::copy(table.row(items[i]).begin(), table.row(items[i]).end(), e.row(i).begin());
  return e;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.values()[i]) - b.values()[i]));
  return m;
}

TEST(IaicCompress, SingleBehaviorGetsAllAttention) {
  Model m = create_model(small_config(), tiny_vocab());
  const Matrix e = rows_of(m, {7});
  Var scores;
  Matrix h = eval(m, [&](auto& t, auto& net) {
    const auto& x = m.params.idx;
    Var q = ad::matmul(t, net.p(x.anchors), net.p(x.iaic_wq));
    Var ev = t.constant(e);
    Var k = ad::matmul(t, ev, net.p(x.iaic_wk));
    Var v = ad::matmul(t, ev, net.p(x.iaic_wv));
    Var out = attend(t, q, k, v, 1.0f, &scores);
    for (float s : t.value(scores).values()) EXPECT_EQ(s, 1.0f);
    return out;
  });
  const Matrix ev = numerics::matmul(e, m.params.at(m.params.idx.iaic_wv).value);
  for (size_t k = 0; k < h.rows(); ++k)
    for (size_t j = 0; j < h.cols(); ++j) EXPECT_EQ(h(k, j), ev(0, j));
  Matrix p = eval(m, [&](auto& t, auto& net) { return iaic_compress(net, t.constant(e)); });
  EXPECT_EQ(p.rows(), 4u);
  EXPECT_EQ(p.cols(), 8u);
}

TEST(IaicCompress, ShapeIndependentOfLengthAndPermutationInvariant) {
  Model m = create_model(small_config(), tiny_vocab());
  for (size_t len : {1u, 7u, 250u, 10000u}) {
    auto hist = random_history(len, 40, len);
    Matrix p = eval(m, [&](auto& t, auto& net) { return iaic_compress(net, t.constant(rows_of(m, hist))); });
    EXPECT_EQ(p.rows(), 4u);
    EXPECT_EQ(p.cols(), 8u);
    if (len < 2) continue;
    auto shuffled = hist;
    Rng rng(len + 1);
    rng.shuffle(std::span<int32_t>(shuffled));
    Matrix q = eval(m, [&](auto& t, auto& net) { return iaic_compress(net, t.constant(rows_of(m, shuffled))); });
    EXPECT_LE(max_abs_diff(p, q), 1e-5) << "L=" << len;
  }
}

TEST(IaicCompress, AnchorsAreIndependent) {
  Model m = create_model(small_config(), tiny_vocab());
  Rng rng(3);
  Matrix h = random_matrix<float>(4, 8, rng);
  Matrix base = eval(m, [&](auto& t, auto& net) { return anchor_ffn(net, t.constant(h)); });
  for (size_t j = 0; j < 4; ++j) {
    Matrix perturbed = h;
    for (float& v : perturbed.row(j)) v += 0.5f;
    Matrix out = eval(m, [&](auto& t, auto& net) { return anchor_ffn(net, t.constant(perturbed)); });
    for (size_t k = 0; k < 4; ++k) {
      const bool same = std::equal(out.row(k).begin(), out.row(k).end(), base.row(k).begin());
      EXPECT_EQ(same, k != j) << "perturbed " << j << " checked " << k;
    }
  }
}

double ortho_value(const Matrix& p, OrthoMode mode = OrthoMode::kFrobenius) {
  Tape<float> t;
  return t.value(ortho_loss(t, t.constant(p), mode))(0, 0);
}

TEST(OrthoLoss, ClosedForms) {
  EXPECT_EQ(ortho_value(Matrix{{0.3f, -2.0f, 5.0f}}), 0.0);
  EXPECT_NEAR(ortho_value(Matrix{{1, 0}, {0, 1}}), 1.0 / std::sqrt(2.0), 1e-6);
  for (size_t k : {2u, 4u, 16u}) {
    // Orthonormal rows from a random rotation via Gram-Schmidt.
    Rng rng(k);
    Matrix q = random_matrix<float>(k, 24, rng);
    MatrixD qd = q.cast<double>();
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < i; ++j) {
        double dot = 0;
        for (size_t c = 0; c < 24; ++c) dot += qd(i, c) * qd(j, c);
        for (size_t c = 0; c < 24; ++c) qd(i, c) -= dot * qd(j, c);
      }
      double n = 0;
      for (size_t c = 0; c < 24; ++c) n += qd(i, c) * qd(i, c);
      for (size_t c = 0; c < 24; ++c) qd(i, c) /= std::sqrt(n);
    }
    const double expected = (double(k) - 1) / std::sqrt(double(k));
    EXPECT_NEAR(ortho_value(qd.cast<float>()), expected, 1e-5) << "K=" << k;
  }
  EXPECT_NEAR((16 - 1) / std::sqrt(16.0), 3.75, 1e-12);
  EXPECT_THROW(ortho_value(Matrix(3, 4)), InvalidArgument);
}

TEST(OrthoLoss, ScaleInvariantAndBoundedBelow) {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t k = 2 + rng.below(15);
    Matrix p = random_matrix<float>(k, 1 + rng.below(20), rng, trial % 3 == 0 ? 100.0 : 1.0);
    const double base = ortho_value(p);
    EXPECT_GE(base, (double(k) - 1) / std::sqrt(double(k)) - 1e-6);
    if (trial % 10 != 0) continue;
    for (float c : {0.1f, 3.0f, 100.0f}) {
      Matrix scaled = p;
      for (float& v : scaled.values()) v *= c;
      EXPECT_LE(std::abs(ortho_value(scaled) - base), 1e-6 * std::max(1.0, base));
    }
  }
}

TEST(OrthoLoss, CosineModeIsZeroForOrthogonalRows) {
  EXPECT_NEAR(ortho_value(Matrix{{3, 0}, {0, 0.2f}}, OrthoMode::kCosine), 0.0, 1e-6);
  EXPECT_NEAR(ortho_value(Matrix{{1, 0}, {2, 0}}, OrthoMode::kCosine), std::sqrt(2.0), 1e-6);
}

TEST(ExplicitProbe, SingleAndIdenticalBehaviors) {
  Model m = create_model(small_config(), tiny_vocab());
  Rng rng(4);
  const Matrix c = random_matrix<float>(1, 8, rng);
  Var scores;
  Matrix eg = eval(m, [&](auto& t, auto& net) {
    Var out = explicit_probe(net, t.constant(c), t.constant(rows_of(m, {3})), &scores);
    EXPECT_EQ(t.value(scores)(0, 0), 1.0f);
    return out;
  });
  Matrix ev = numerics::matmul(rows_of(m, {3}), m.params.at(m.params.idx.global_wv).value);
  EXPECT_EQ(eg, ev);
  eval(m, [&](auto& t, auto& net) {
    Var out = explicit_probe(net, t.constant(c), t.constant(rows_of(m, {5, 5, 5, 5, 5})), &scores);
    for (float s : t.value(scores).values()) EXPECT_NEAR(s, 0.2f, 1e-7);
    return out;
  });
}

TEST(ExplicitProbe, PermutationEquivariant) {
  Model m = create_model(small_config(), tiny_vocab());
  Rng rng(5);
  const Matrix c = random_matrix<float>(1, 8, rng);
  auto hist = random_history(60, 40, 9);
  std::vector<size_t> perm(hist.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<size_t>(perm));
  std::vector<int32_t> permuted(hist.size());
  for (size_t i = 0; i < perm.size(); ++i) permuted[i] = hist[perm[i]];
  Matrix s1, s2;
  Matrix a = eval(m, [&](auto& t, auto& net) {
    Var s;
    Var o = explicit_probe(net, t.constant(c), t.constant(rows_of(m, hist)), &s);
    s1 = t.value(s);
    return o;
  });
  Matrix b = eval(m, [&](auto& t, auto& net) {
    Var s;
    Var o = explicit_probe(net, t.constant(c), t.constant(rows_of(m, permuted)), &s);
    s2 = t.value(s);
    return o;
  });
  EXPECT_LE(max_abs_diff(a, b), 1e-5);
  double sum = 0;
  for (size_t i = 0; i < perm.size(); ++i) {
    EXPECT_NEAR(s2(0, i), s1(0, perm[i]), 1e-6);
    sum += s1(0, i);
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(GatedLatentProbe, ZeroQueryAveragesAnchors) {
  Model m = create_model(small_config(), tiny_vocab());
  Rng rng(6);
  const Matrix p = random_matrix<float>(4, 8, rng);
  const Matrix eg = random_matrix<float>(1, 8, rng, 10.0);
  Var scores, gate;
  Matrix el = eval(m, [&](auto& t, auto& net) {
    Var o = gated_latent_probe(net, t.constant(Matrix(1, 8)), t.constant(eg), t.constant(p), &scores, &gate);
    for (float s : t.value(scores).values()) EXPECT_EQ(s, 0.25f);
    for (float g : t.value(gate).values()) {
      EXPECT_GT(g, 0.0f);
      EXPECT_LT(g, 1.0f);
    }
    return o;
  });
  Matrix mean(1, 8);
  for (size_t k = 0; k < 4; ++k)
    for (size_t j = 0; j < 8; ++j) mean(0, j) += p(k, j) / 4;
  EXPECT_LE(max_abs_diff(el, numerics::matmul(mean, m.params.at(m.params.idx.local_wv).value)), 1e-6);
}

TEST(GatedLatentProbe, SingleAnchorIgnoresGate) {
  auto c = small_config();
  c.num_anchors = 1;
  Model m = create_model(c, tiny_vocab());
  Rng rng(7);
  const Matrix p = random_matrix<float>(1, 8, rng);
  const Matrix expected = numerics::matmul(p, m.params.at(m.params.idx.local_wv).value);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix q = random_matrix<float>(1, 8, rng), eg = random_matrix<float>(1, 8, rng, 5.0);
    Matrix el = eval(m, [&](auto& t, auto& net) {
      return gated_latent_probe(net, t.constant(q), t.constant(eg), t.constant(p));
    });
    EXPECT_EQ(el, expected);
  }
}

TEST(OnlineAttention, IdenticalCachedVectorsReturnValueProjection) {
  Model m = create_model(small_config(), tiny_vocab());
  Rng rng(8);
  const Matrix v = random_matrix<float>(1, 8, rng);
  Matrix cached(2, 8);
  std::copy(v.values().begin(), v.values().end(), cached.row(0).begin());
  std::copy(v.values().begin(), v.values().end(), cached.row(1).begin());
  const Matrix expected = numerics::matmul(v, m.params.at(m.params.idx.online_wv).value);
  for (int32_t item : {0, 5, 17}) EXPECT_EQ(online_rank(m, item, cached), expected);
  EXPECT_EQ(online_rank(m, 3, Matrix(2, 8)), Matrix(1, 8));
}

TEST(Predict, ZeroHeadGivesHalfAndOutputsStayInside) {
  Model m = create_model(small_config(), tiny_vocab());
  GroupInput in{1, {}, {0, 1, 2}, {}};
  auto hist = random_history(30, 40, 1);
  in.history = hist;
  for (auto& p : m.params.params)
    if (p.name.rfind("head.", 0) == 0) p.value.fill(0.0f);
  for (float p : predict(m, in)) EXPECT_EQ(p, 0.5f);
  Model big = create_model(small_config(), tiny_vocab());
  for (auto& p : big.params.params)
    if (p.name.rfind("head.", 0) == 0)
      for (float& v : p.value.values()) v *= 50.0f;
  for (float p : predict(big, in)) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
}

TEST(Predict, HeadWidthMismatchThrows) {
  Model m = create_model(small_config(), tiny_vocab());
  EXPECT_THROW(eval(m, [&](auto& t, auto& net) { return head_logits(net, t.constant(Matrix(1, 5 * 8))); }),
               DimensionError);
}

TEST(UxsidEmbed, ShapeDeterminismAndBatchedEquality) {
  Model m = create_model(small_config(), tiny_vocab());
  auto hist = random_history(120, 40, 2);
  EmbedResult a = uxsid_embed(m, hist, 3);
  EmbedResult b = uxsid_embed(m, hist, 3);
  EXPECT_EQ(a.embedding.rows(), 2u);
  EXPECT_EQ(a.embedding.cols(), 8u);
  EXPECT_EQ(a.embedding, b.embedding);
  EXPECT_EQ(a.global_scores.size(), 120u);
  EXPECT_EQ(a.local_scores.size(), 4u);
  const std::vector<int32_t> sids = {5, 3, 0, 3};
  auto many = uxsid_embed_many(m, hist, sids);
  for (size_t i = 0; i < sids.size(); ++i) EXPECT_EQ(many[i].embedding, uxsid_embed(m, hist, sids[i]).embedding);
  EXPECT_THROW(uxsid_embed(m, std::vector<int32_t>{}, 0), InvalidArgument);
  EXPECT_THROW(uxsid_embed(m, std::vector<int32_t>{999}, 0), NotFound);
}

TEST(UxsidEmbed, CachedPathMatchesFullForward) {
  Model m = create_model(small_config(), tiny_vocab());
  auto hist = random_history(64, 40, 3);
  GroupInput in{2, hist, {4, 9, 31}, {}};
  const auto full = predict(m, in);
  std::vector<Matrix> cached;
  for (int32_t t : in.targets) cached.push_back(uxsid_embed(m, hist, m.vocab.item_sid[t]).embedding);
  const auto fast = predict_from_cache(m, 2, hist, in.targets, cached);
  EXPECT_EQ(full, fast);
}

TEST(JointLoss, ClosedFormsAndLinearityInLambda) {
  auto c = small_config();
  c.lambda = 0.0;
  Model m = create_model(c, tiny_vocab());
  auto hist = random_history(20, 40, 4);
  std::vector<GroupInput> groups = {{0, hist, {1, 2}, {1.0f, 0.0f}}, {3, hist, {5}, {1.0f}}};
  auto zero_head = m.params;
  for (auto& p : zero_head.params)
    if (p.name.rfind("head.", 0) == 0) p.value.fill(0.0f);
  std::vector<GroupInput> single = {{0, hist, {1}, {1.0f}}};
  EXPECT_NEAR(joint_loss(zero_head, m.vocab, single, false).total, std::log(2.0), 1e-6);

  auto ps0 = m.params;
  auto ps1 = m.params;
  ps1.config.lambda = 0.1;
  const auto l0 = joint_loss(ps0, m.vocab, groups, false);
  const auto l1 = joint_loss(ps1, m.vocab, groups, false);
  const double mean_ortho = l0.ortho_weighted_sum / l0.examples;
  EXPECT_GT(mean_ortho, 0.0);
  EXPECT_NEAR(l1.total - l0.total, 0.1 * mean_ortho, 1e-12);
}

TEST(JointLoss, ThreadCountDoesNotChangeGradients) {
  Model m = create_model(small_config(), tiny_vocab());
  std::vector<std::vector<int32_t>> hists;
  for (int u = 0; u < 5; ++u) hists.push_back(random_history(30 + u, 40, 10 + u));
  std::vector<GroupInput> groups;
  for (int u = 0; u < 5; ++u) groups.push_back({u, hists[u], {u, u + 7}, {1.0f, 0.0f}});
  auto a = m.params, b = m.params;
  joint_loss(a, m.vocab, groups, true, 1);
  joint_loss(b, m.vocab, groups, true, 3);
  for (size_t i = 0; i < a.params.size(); ++i) EXPECT_EQ(a.params[i].grad, b.params[i].grad) << a.params[i].name;
}

class JointLossGradCheck : public ::testing::TestWithParam<std::tuple<Variant, OrthoMode>> {};

TEST_P(JointLossGradCheck, MatchesFiniteDifferences) {
  auto [variant, mode] = GetParam();
  auto c = small_config(variant);
  c.num_anchors = 4;
  c.ortho_mode = mode;
  c.lambda = 0.1;
  c.din_window = 10;
  c.gsu_r = 6;
  Model m = create_model(c, tiny_vocab(12, 4, 3));
  auto ps = m.params.cast<double>();
  auto h0 = random_history(32, 12, 21), h1 = random_history(32, 12, 22);
  std::vector<GroupInput> groups = {{0, h0, {1, 6, 11}, {1.0f, 0.0f, 1.0f}}, {2, h1, {3}, {0.0f}}};
  numerics::LossFn fn = [&](bool with_grad) { return joint_loss(ps, m.vocab, groups, with_grad).total; };
  std::vector<numerics::BasicParam<double>*> ptrs;
  for (auto& p : ps.params) ptrs.push_back(&p);
  auto report = numerics::grad_check(fn, ptrs);
  EXPECT_TRUE(report.passed) << "max rel " << report.max_rel_error << " at " << report.worst_param << "["
                             << report.worst_entry << "] analytic " << report.worst_analytic << " numeric "
                             << report.worst_numeric;
  EXPECT_GT(report.entries_checked, 500u);
}

INSTANTIATE_TEST_SUITE_P(Variants, JointLossGradCheck,
                         ::testing::Values(std::make_tuple(Variant::kUxsid, OrthoMode::kFrobenius),
                                           std::make_tuple(Variant::kUxsid, OrthoMode::kCosine),
                                           std::make_tuple(Variant::kDin, OrthoMode::kFrobenius),
                                           std::make_tuple(Variant::kSimHard, OrthoMode::kFrobenius),
                                           std::make_tuple(Variant::kSimSoft, OrthoMode::kFrobenius)));

TEST(Checkpoint, RoundTripAndValidation) {
  for (Variant v : {Variant::kUxsid, Variant::kDin}) {
    Model m = create_model(small_config(v), tiny_vocab());
    const auto bytes = serialize_model(m);
    Model back = deserialize_model(bytes);
    EXPECT_EQ(serialize_model(back), bytes);
    EXPECT_EQ(params_checksum(back.params), params_checksum(m.params));
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    EXPECT_THROW(deserialize_model(truncated), FormatError);
    auto bad = bytes;
    bad[1] = 'Z';
    EXPECT_THROW(deserialize_model(bad), FormatError);
  }
  Model m = create_model(small_config(), tiny_vocab());
  const uint64_t before = params_checksum(m.params);
  m.params.params[5].value(0, 0) += 1e-3f;
  EXPECT_NE(params_checksum(m.params), before);
}

}  // namespace
}  // namespace uxsid::model
