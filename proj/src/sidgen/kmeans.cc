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

#include "uxsid/sidgen/kmeans.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "uxsid/common/error.h"
#include "uxsid/common/parallel.h"
#include "uxsid/common/rng.h"

namespace uxsid::sidgen {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += diff * diff;
  }
  return s;
}

int32_t nearest_centroid(const Matrix& centroids, std::span<const float> x, double* distance) {
  int32_t best = 0;
  double best_d = squared_distance(centroids.row(0), x);
  for (size_t c = 1; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), x);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int32_t>(c);
    }
  }
  if (distance != nullptr) *distance = best_d;
  return best;
}

namespace {

void copy_row(const Matrix& from, size_t src, Matrix& to, size_t dst) {
  std::copy(from.row(src).begin(), from.row(src).end(), to.row(dst).begin());
}

Matrix seed_plus_plus(const Matrix& points, size_t j, Rng& rng) {
  const size_t n = points.rows();
  Matrix centroids(j, points.cols());
  copy_row(points, static_cast<size_t>(rng.below(n)), centroids, 0);
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));
  for (size_t c = 1; c < j; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left target past the running sum; take the last live point.
        for (size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point already coincides with a centroid.
      pick = static_cast<size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    copy_row(points, pick, centroids, c);
    for (size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, size_t j, const KMeansOptions& options) {
  const size_t n = points.rows();
  const size_t d = points.cols();
  if (n == 0) throw InvalidArgument("kmeans: empty input");
  if (j == 0) throw InvalidArgument("kmeans: cluster count must be >= 1");
  if (options.max_iter == 0) throw InvalidArgument("kmeans: max_iter must be >= 1");

  Rng rng(options.seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, j, rng);
  result.assignments.assign(n, 0);
  std::vector<double> dist(n);

  double prev_inertia = 0.0;
  for (size_t iter = 0;; ++iter) {
    parallel_for(n, options.threads, [&](size_t i) {
      result.assignments[i] = nearest_centroid(result.centroids, points.row(i), &dist[i]);
    });
    double inertia = 0.0;
    for (double v : dist) inertia += v;
    result.inertia = inertia;
    result.iterations = iter + 1;
    if (iter > 0) {
      const double change = std::abs(prev_inertia - inertia);
      if (prev_inertia == 0.0 || change <= options.tol * prev_inertia) break;
    }
    if (iter + 1 >= options.max_iter) break;
    prev_inertia = inertia;

    std::vector<double> sums(j * d, 0.0);
    std::vector<size_t> counts(j, 0);
    for (size_t i = 0; i < n; ++i) {
      const size_t c = static_cast<size_t>(result.assignments[i]);
      ++counts[c];
      auto row = points.row(i);
      for (size_t k = 0; k < d; ++k) sums[c * d + k] += row[k];
    }
    std::vector<bool> taken(n, false);
    for (size_t c = 0; c < j; ++c) {
      if (counts[c] > 0) {
        for (size_t k = 0; k < d; ++k)
          result.centroids(c, k) = static_cast<float>(sums[c * d + k] / static_cast<double>(counts[c]));
        continue;
      }
      // Empty cluster: move it onto the worst-served point not yet used.
      size_t far = n;
      for (size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) far = static_cast<size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      else taken[far] = true;
      copy_row(points, far, result.centroids, c);
      ++result.reseeds;
    }
  }
  return result;
}

}  // namespace uxsid::sidgen
