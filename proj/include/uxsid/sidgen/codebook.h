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

#ifndef UXSID_SIDGEN_CODEBOOK_H_
#define UXSID_SIDGEN_CODEBOOK_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::sidgen {

using numerics::Matrix;

struct ContentVector {
  int64_t item_id = 0;
  std::vector<float> z;
  int32_t category = 0;
};

using SidTuple = std::vector<uint32_t>;

struct Codebook {
  std::vector<Matrix> levels;   // each J x d_c
  std::vector<double> inertia;  // per level, over the training set

  size_t num_levels() const { return levels.size(); }
  size_t codewords() const { return levels.empty() ? 0 : levels[0].rows(); }
  size_t dim() const { return levels.empty() ? 0 : levels[0].cols(); }
};

struct CodebookOptions {
  size_t levels = 4;
  size_t codewords = 256;
  size_t max_iter = 100;
  double tol = 1e-6;
  uint64_t seed = 0;
  size_t threads = 1;
};

// Level m is trained on the residuals left by levels < m.
Codebook train_codebooks(const Matrix& vectors, const CodebookOptions& options);

// Greedy nearest codeword per level on the running residual (r_0 = z).
// When `residual` is given it receives the final residual.
SidTuple encode(const Codebook& cb, std::span<const float> z,
                std::vector<float>* residual = nullptr);

// Sum of the selected codewords.
std::vector<float> reconstruct(const Codebook& cb, const SidTuple& sid);

// z minus each selected codeword in level order; the same float operations
// encode() performs, so the two agree bit for bit.
std::vector<float> residual(const Codebook& cb, std::span<const float> z, const SidTuple& sid);

inline uint32_t first_layer_sid(const SidTuple& sid) { return sid.at(0); }

std::vector<uint8_t> serialize_codebook(const Codebook& cb);
Codebook deserialize_codebook(std::span<const uint8_t> bytes);
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

// items.jsonl: {"item_id": int, "vector": [..], "category": int} per line.
std::vector<ContentVector> load_content_jsonl(const std::string& path);
std::string content_to_jsonl(std::span<const ContentVector> items);
Matrix stack_vectors(std::span<const ContentVector> items);

}  // namespace uxsid::sidgen

#endif  // UXSID_SIDGEN_CODEBOOK_H_
