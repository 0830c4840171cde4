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

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"
#include "uxsid/common/binary_io.h"
#include "uxsid/common/json_util.h"
#include "uxsid/sidgen/codebook.h"
#include "uxsid/sidgen/kmeans.h"

namespace uxsid::sidgen {
namespace {

using testing::random_matrix;

// Exhaustive per-level argmin, written independently of encode().
SidTuple oracle_encode(const Codebook& cb, std::vector<float> r) {
  SidTuple sid;
  for (const Matrix& level : cb.levels) {
    std::vector<double> dists;
    for (size_t c = 0; c < level.rows(); ++c) {
      double s = 0;
      for (size_t i = 0; i < r.size(); ++i) {
        double diff = double(r[i]) - double(level(c, i));
        s += diff * diff;
      }
      dists.push_back(s);
    }
    const size_t best = std::min_element(dists.begin(), dists.end()) - dists.begin();
    sid.push_back(static_cast<uint32_t>(best));
    for (size_t i = 0; i < r.size(); ++i) r[i] -= level(best, i);
  }
  return sid;
}

double sse(const Matrix& points, const Matrix& centroids, const std::vector<int32_t>& a) {
  double s = 0;
  for (size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centroids.row(a[i]));
  return s;
}

TEST(KMeans, TwoSeparatedPairs) {
  Matrix points{{0, 0}, {0, 1}, {10, 10}, {10, 11}};
  // Exhaustive 2-clustering oracle: best split over all 2^3 labelings.
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> lab = {0, (mask >> 0) & 1, (mask >> 1) & 1, (mask >> 2) & 1};
    double total = 0;
    for (int c = 0; c < 2; ++c) {
      double mx = 0, my = 0;
      int n = 0;
      for (int i = 0; i < 4; ++i)
        if (lab[i] == c) mx += points(i, 0), my += points(i, 1), ++n;
      if (n == 0) continue;
      mx /= n, my /= n;
      for (int i = 0; i < 4; ++i)
        if (lab[i] == c)
          total += (points(i, 0) - mx) * (points(i, 0) - mx) + (points(i, 1) - my) * (points(i, 1) - my);
    }
    best = std::min(best, total);
  }
  EXPECT_DOUBLE_EQ(best, 1.0);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto fit = kmeans(points, 2, {.seed = seed});
    EXPECT_DOUBLE_EQ(fit.inertia, best);
    EXPECT_EQ(fit.assignments[0], fit.assignments[1]);
    EXPECT_EQ(fit.assignments[2], fit.assignments[3]);
    EXPECT_NE(fit.assignments[0], fit.assignments[2]);
    auto c0 = fit.centroids.row(fit.assignments[0]);
    EXPECT_FLOAT_EQ(c0[0], 0.0f);
    EXPECT_FLOAT_EQ(c0[1], 0.5f);
  }
}

TEST(KMeans, SingleClusterIsMean) {
  Rng rng(4);
  auto points = random_matrix<float>(50, 3, rng);
  auto fit = kmeans(points, 1, {});
  double expected = 0;
  for (size_t k = 0; k < 3; ++k) {
    double mean = 0;
    for (size_t i = 0; i < 50; ++i) mean += points(i, k);
    mean /= 50;
    EXPECT_NEAR(fit.centroids(0, k), mean, 1e-6);
    for (size_t i = 0; i < 50; ++i) expected += (points(i, k) - mean) * (points(i, k) - mean);
  }
  EXPECT_NEAR(fit.inertia, expected, 1e-6 * expected);
}

TEST(KMeans, IdenticalPointsGiveZeroInertia) {
  Matrix points(5, 2, 3.25f);
  auto fit = kmeans(points, 3, {});
  EXPECT_EQ(fit.inertia, 0.0);
  for (size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(fit.centroids(c, 0), 3.25f);
    EXPECT_EQ(fit.centroids(c, 1), 3.25f);
  }
}

TEST(KMeans, MoreClustersThanPointsUsesEveryPoint) {
  Matrix points{{0, 0}, {1, 0}, {0, 1}};
  auto fit = kmeans(points, 5, {.seed = 9});
  EXPECT_EQ(fit.inertia, 0.0);
  std::vector<bool> seen(3, false);
  for (size_t c = 0; c < 5; ++c)
    for (size_t i = 0; i < 3; ++i)
      if (squared_distance(fit.centroids.row(c), points.row(i)) == 0) seen[i] = true;
  EXPECT_EQ(seen, std::vector<bool>({true, true, true}));
}

TEST(KMeans, EmptyInputRejected) {
  EXPECT_THROW(kmeans(Matrix(0, 2), 2, {}), InvalidArgument);
  EXPECT_THROW(kmeans(Matrix(3, 2), 0, {}), InvalidArgument);
}

TEST(KMeans, FinalAssignmentsAreNearestAndDeterministic) {
  Rng rng(8);
  auto points = random_matrix<float>(400, 4, rng);
  auto a = kmeans(points, 7, {.seed = 3, .threads = 1});
  auto b = kmeans(points, 7, {.seed = 3, .threads = 4});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
  for (size_t i = 0; i < points.rows(); ++i)
    EXPECT_EQ(a.assignments[i], nearest_centroid(a.centroids, points.row(i)));
  EXPECT_DOUBLE_EQ(a.inertia, sse(points, a.centroids, a.assignments));
}

Codebook example_codebook() {
  Codebook cb;
  cb.levels = {Matrix{{1, 0}, {0, 1}}, Matrix{{0, 0}, {-0.1f, 0.1f}}};
  cb.inertia = {0, 0};
  return cb;
}

TEST(Encode, WorkedExample) {
  Codebook cb = example_codebook();
  const std::vector<float> z = {0.9f, 0.1f};
  std::vector<float> r;
  SidTuple sid = encode(cb, z, &r);
  EXPECT_EQ(sid, (SidTuple{0, 1}));
  EXPECT_EQ(sid, oracle_encode(cb, z));
  EXPECT_NEAR(r[0], 0.0f, 1e-7);
  EXPECT_NEAR(r[1], 0.0f, 1e-7);
  auto rec = reconstruct(cb, sid);
  EXPECT_NEAR(rec[0], 0.9f, 1e-7);
  EXPECT_NEAR(rec[1], 0.1f, 1e-7);
}

TEST(Encode, ExactCodewordAndZeroLevel) {
  Rng rng(2);
  Codebook cb;
  cb.levels = {random_matrix<float>(8, 3, rng), random_matrix<float>(4, 3, rng)};
  cb.levels[1].row(2)[0] = cb.levels[1].row(2)[1] = cb.levels[1].row(2)[2] = 0.0f;
  std::vector<float> z(cb.levels[0].row(5).begin(), cb.levels[0].row(5).end());
  std::vector<float> r;
  EXPECT_EQ(encode(cb, z, &r), (SidTuple{5, 2}));
  EXPECT_EQ(r, std::vector<float>(3, 0.0f));
}

TEST(Encode, TieGoesToLowerIndex) {
  Codebook cb;
  cb.levels = {Matrix{{1, 0}, {-1, 0}, {0, 5}}};
  EXPECT_EQ(encode(cb, std::vector<float>{0, 0}), SidTuple{0});
  cb.levels = {Matrix{{0, 5}, {-1, 0}, {1, 0}}};
  EXPECT_EQ(encode(cb, std::vector<float>{0, 0}), SidTuple{1});
}

TEST(Encode, DimensionMismatchAndBadCodes) {
  Codebook cb = example_codebook();
  EXPECT_THROW(encode(cb, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(reconstruct(cb, SidTuple{0, 2}), InvalidArgument);
  EXPECT_THROW(reconstruct(cb, SidTuple{0}), DimensionError);
}

TEST(Reconstruct, ZeroAndSingleLevel) {
  Codebook zero;
  zero.levels = {Matrix(3, 2), Matrix(3, 2)};
  EXPECT_EQ(reconstruct(zero, SidTuple{1, 2}), std::vector<float>(2, 0.0f));
  Codebook one;
  one.levels = {Matrix{{1, 2}, {3, 4}}};
  EXPECT_EQ(reconstruct(one, SidTuple{1}), (std::vector<float>{3, 4}));
}

TEST(FirstLayerSid, ReturnsLeadingCode) {
  EXPECT_EQ(first_layer_sid(SidTuple{5, 1, 200, 3}), 5u);
  EXPECT_EQ(first_layer_sid(SidTuple{0, 0, 0, 0}), 0u);
}

TEST(TrainCodebooks, OneCodewordPerDistinctPointGivesZeroResidual) {
  Rng rng(6);
  auto points = random_matrix<float>(12, 4, rng);
  auto cb = train_codebooks(points, {.levels = 1, .codewords = 12, .seed = 1});
  for (size_t i = 0; i < points.rows(); ++i) {
    std::vector<float> r;
    encode(cb, points.row(i), &r);
    EXPECT_EQ(r, std::vector<float>(4, 0.0f));
  }
}

class TrainedCodebookTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng(42);
    points_ = new Matrix(random_matrix<float>(2000, 8, rng));
    // Add cluster structure so levels carry different scales.
    for (size_t i = 0; i < points_->rows(); ++i) (*points_)(i, i % 8) += 4.0f * float(i % 5);
    cb_ = new Codebook(train_codebooks(*points_, {.levels = 4, .codewords = 16, .seed = 7}));
  }
  static void TearDownTestSuite() {
    delete points_;
    delete cb_;
  }
  static Matrix* points_;
  static Codebook* cb_;
};
Matrix* TrainedCodebookTest::points_ = nullptr;
Codebook* TrainedCodebookTest::cb_ = nullptr;

TEST_F(TrainedCodebookTest, ResidualEnergyNonIncreasingAcrossLevels) {
  double prev = 0;
  for (size_t i = 0; i < points_->rows(); ++i)
    for (float v : points_->row(i)) prev += double(v) * v;
  prev /= points_->rows();
  for (size_t m = 0; m < cb_->num_levels(); ++m) {
    const double mean = cb_->inertia[m] / points_->rows();
    EXPECT_LE(mean, prev) << "level " << m;
    prev = mean;
  }
}

TEST_F(TrainedCodebookTest, EncodeMatchesOracleAndResidualRoundTrip) {
  Rng rng(99);
  auto queries = random_matrix<float>(2000, 8, rng, 3.0);
  for (size_t i = 0; i < queries.rows(); ++i) {
    std::vector<float> z(queries.row(i).begin(), queries.row(i).end());
    std::vector<float> tracked;
    SidTuple sid = encode(*cb_, z, &tracked);
    ASSERT_EQ(sid, oracle_encode(*cb_, z));
    EXPECT_EQ(residual(*cb_, z, sid), tracked);
    auto rec = reconstruct(*cb_, sid);
    double err = 0, res = 0;
    for (size_t k = 0; k < z.size(); ++k) {
      err += (double(z[k]) - rec[k]) * (double(z[k]) - rec[k]);
      res += double(tracked[k]) * tracked[k];
    }
    EXPECT_NEAR(std::sqrt(err), std::sqrt(res), 1e-5);
  }
}

TEST_F(TrainedCodebookTest, DeterministicBytesAndRoundTrip) {
  auto again = train_codebooks(*points_, {.levels = 4, .codewords = 16, .seed = 7, .threads = 3});
  const auto bytes = serialize_codebook(*cb_);
  EXPECT_EQ(serialize_codebook(again), bytes);
  EXPECT_EQ(bytes.size(), 4 + 2 + 2 + 4 + 4 + 4 * 16 * 8 * 4 + 4 * 8u);
  auto loaded = deserialize_codebook(bytes);
  EXPECT_EQ(serialize_codebook(loaded), bytes);
}

TEST(CodebookIo, RejectsCorruptFiles) {
  Codebook cb = example_codebook();
  auto bytes = serialize_codebook(cb);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_codebook(bad), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(deserialize_codebook(truncated), FormatError);
  EXPECT_THROW(deserialize_codebook(std::vector<uint8_t>(6)), FormatError);
}

TEST(ContentJsonl, RoundTripsFloatsExactly) {
  Rng rng(1);
  std::vector<ContentVector> items;
  for (int i = 0; i < 200; ++i) {
    ContentVector cv{i * 7, {}, i % 3};
    for (int k = 0; k < 6; ++k) cv.z.push_back(float(rng.normal(0, 1e3 * rng.uniform())));
    items.push_back(cv);
  }
  const auto path = (std::filesystem::temp_directory_path() / "uxsid_items_test.jsonl").string();
  write_file_atomic(path, content_to_jsonl(items));
  auto loaded = load_content_jsonl(path);
  ASSERT_EQ(loaded.size(), items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(loaded[i].item_id, items[i].item_id);
    EXPECT_EQ(loaded[i].category, items[i].category);
    EXPECT_EQ(loaded[i].z, items[i].z);
  }
  write_file_atomic(path, std::string("{\"item_id\": 1, \"vector\": [1, 2]}\nnot json\n"));
  try {
    load_content_jsonl(path);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace uxsid::sidgen
