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

#include "uxsid/sidgen/codebook.h"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/json_util.h"
#include "uxsid/common/rng.h"
#include "uxsid/sidgen/kmeans.h"

namespace uxsid::sidgen {

namespace {

constexpr char kMagic[] = "UXCB";
constexpr uint16_t kVersion = 1;

void check_codes(const Codebook& cb, const SidTuple& sid) {
  if (sid.size() != cb.num_levels())
    throw DimensionError("sid length " + std::to_string(sid.size()) + " != levels " +
                         std::to_string(cb.num_levels()));
  for (size_t m = 0; m < sid.size(); ++m)
    if (sid[m] >= cb.levels[m].rows())
      throw InvalidArgument("code " + std::to_string(sid[m]) + " out of range at level " +
                            std::to_string(m));
}

}  // namespace

Codebook train_codebooks(const Matrix& vectors, const CodebookOptions& options) {
  if (options.levels == 0) throw InvalidArgument("codebook levels must be >= 1");
  if (options.codewords == 0) throw InvalidArgument("codewords per level must be >= 1");
  if (vectors.rows() == 0) throw InvalidArgument("no content vectors to train on");
  Codebook cb;
  Matrix residuals = vectors;
  for (size_t m = 0; m < options.levels; ++m) {
    KMeansOptions km;
    km.max_iter = options.max_iter;
    km.tol = options.tol;
    km.seed = derive_seed(options.seed, m);
    km.threads = options.threads;
    KMeansResult fit = kmeans(residuals, options.codewords, km);
    for (size_t i = 0; i < residuals.rows(); ++i) {
      auto c = fit.centroids.row(static_cast<size_t>(fit.assignments[i]));
      auto r = residuals.row(i);
      for (size_t k = 0; k < r.size(); ++k) r[k] -= c[k];
    }
    cb.levels.push_back(std::move(fit.centroids));
    cb.inertia.push_back(fit.inertia);
  }
  return cb;
}

SidTuple encode(const Codebook& cb, std::span<const float> z, std::vector<float>* residual_out) {
  if (z.size() != cb.dim())
    throw DimensionError("vector dim " + std::to_string(z.size()) + " != codebook dim " +
                         std::to_string(cb.dim()));
  std::vector<float> r(z.begin(), z.end());
  SidTuple sid(cb.num_levels());
  for (size_t m = 0; m < cb.num_levels(); ++m) {
    const int32_t k = nearest_centroid(cb.levels[m], r);
    sid[m] = static_cast<uint32_t>(k);
    auto c = cb.levels[m].row(static_cast<size_t>(k));
    for (size_t i = 0; i < r.size(); ++i) r[i] -= c[i];
  }
  if (residual_out != nullptr) *residual_out = std::move(r);
  return sid;
}

std::vector<float> reconstruct(const Codebook& cb, const SidTuple& sid) {
  check_codes(cb, sid);
  std::vector<float> out(cb.dim(), 0.0f);
  for (size_t m = 0; m < sid.size(); ++m) {
    auto c = cb.levels[m].row(sid[m]);
    for (size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  }
  return out;
}

std::vector<float> residual(const Codebook& cb, std::span<const float> z, const SidTuple& sid) {
  check_codes(cb, sid);
  if (z.size() != cb.dim()) throw DimensionError("vector dim does not match codebook");
  std::vector<float> r(z.begin(), z.end());
  for (size_t m = 0; m < sid.size(); ++m) {
    auto c = cb.levels[m].row(sid[m]);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= c[i];
  }
  return r;
}

std::vector<uint8_t> serialize_codebook(const Codebook& cb) {
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put_u16(kVersion);
  w.put_u16(static_cast<uint16_t>(cb.num_levels()));
  w.put_u32(static_cast<uint32_t>(cb.codewords()));
  w.put_u32(static_cast<uint32_t>(cb.dim()));
  for (const Matrix& level : cb.levels) w.put_f32s(level.values());
  for (double v : cb.inertia) w.put_f64(v);
  return w.release();
}

Codebook deserialize_codebook(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "codebook");
  if (r.str(4) != std::string_view(kMagic, 4)) throw FormatError("codebook: bad magic");
  const uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("codebook: unsupported version " + std::to_string(version));
  const size_t m = r.u16();
  const size_t j = r.u32();
  const size_t d = r.u32();
  if (m == 0 || j == 0 || d == 0) throw FormatError("codebook: empty shape");
  if (r.remaining() != m * j * d * 4 + m * 8) throw FormatError("codebook: size does not match header");
  Codebook cb;
  for (size_t level = 0; level < m; ++level) {
    Matrix c(j, d);
    r.f32s(c.values());
    cb.levels.push_back(std::move(c));
  }
  for (size_t level = 0; level < m; ++level) cb.inertia.push_back(r.f64());
  return cb;
}

void save_codebook(const Codebook& cb, const std::string& path) {
  write_file_atomic(path, serialize_codebook(cb));
}

Codebook load_codebook(const std::string& path) { return deserialize_codebook(read_file_bytes(path)); }

std::vector<ContentVector> load_content_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ContentVector> items;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json j = parse_json_line(line, where);
    ContentVector cv;
    cv.item_id = json_field<int64_t>(j, "item_id", where);
    cv.category = j.contains("category") ? json_field<int32_t>(j, "category", where) : 0;
    const auto& vec = j.contains("vector") ? j.at("vector") : nlohmann::json();
    if (!vec.is_array() || vec.empty()) throw FormatError(where + ": missing or empty \"vector\"");
    for (const auto& v : vec) {
      if (!v.is_number()) throw FormatError(where + ": non-numeric vector entry");
      cv.z.push_back(v.get<float>());
    }
    if (!items.empty() && cv.z.size() != items.front().z.size())
      throw FormatError(where + ": vector dimension differs from first item");
    items.push_back(std::move(cv));
  }
  if (items.empty()) throw FormatError(path + ": no items");
  return items;
}

std::string content_to_jsonl(std::span<const ContentVector> items) {
  std::string out;
  for (const ContentVector& cv : items) {
    out += "{\"item_id\":" + std::to_string(cv.item_id) + ",\"vector\":[";
    for (size_t i = 0; i < cv.z.size(); ++i) {
      if (i > 0) out += ',';
      out += format_float(cv.z[i]);
    }
    out += "],\"category\":" + std::to_string(cv.category) + "}\n";
  }
  return out;
}

Matrix stack_vectors(std::span<const ContentVector> items) {
  if (items.empty()) return Matrix();
  Matrix m(items.size(), items[0].z.size());
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].z.size() != m.cols()) throw DimensionError("ragged content vectors");
    std::copy(items[i].z.begin(), items[i].z.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace uxsid::sidgen
