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

#ifndef UXSID_SIDGEN_KMEANS_H_
#define UXSID_SIDGEN_KMEANS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::sidgen {

using numerics::Matrix;

struct KMeansOptions {
  size_t max_iter = 100;
  // Stop once the relative inertia change falls below tol.
  double tol = 1e-6;
  uint64_t seed = 0;
  size_t threads = 1;
};

struct KMeansResult {
  Matrix centroids;  // j x d
  std::vector<int32_t> assignments;
  double inertia = 0.0;
  size_t iterations = 0;
  size_t reseeds = 0;
};

// Squared distance accumulated in double.
double squared_distance(std::span<const float> a, std::span<const float> b);

// Index of the nearest row of `centroids`; ties go to the lowest index.
int32_t nearest_centroid(const Matrix& centroids, std::span<const float> x,
                         double* distance = nullptr);

// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to
// the point farthest from its centroid. The last step is always an
// assignment step, so assignments are nearest-centroid.
KMeansResult kmeans(const Matrix& points, size_t j, const KMeansOptions& options);

}  // namespace uxsid::sidgen

#endif  // UXSID_SIDGEN_KMEANS_H_
