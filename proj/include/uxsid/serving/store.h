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

#ifndef UXSID_SERVING_STORE_H_
#define UXSID_SERVING_STORE_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::serving {

// FNV-1a 64 over little-endian u64 uid followed by little-endian u32 sid.
uint64_t make_key(uint64_t uid, uint32_t sid);

// Frozen map from (uid, sid) to a 2 x d E^UxSID record. Records live in one
// flat array in insertion order; distinct pairs that hash to the same key go
// to a side-table keyed by the pair itself.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  using KeyFn = uint64_t (*)(uint64_t uid, uint32_t sid);

  // key_fn exists so tests can force collisions; only make_key stores can be
  // saved.
  EmbeddingStore(size_t d, uint64_t params_checksum, KeyFn key_fn = &make_key);
  EmbeddingStore(const EmbeddingStore& o);
  EmbeddingStore& operator=(const EmbeddingStore& o);

  // Throws StateError after freeze and InvalidArgument on a repeated pair.
  void insert(uint64_t uid, uint32_t sid, std::span<const float> values);
  void freeze() { frozen_ = true; }

  // Pointer to the 2*d stored floats, or nullptr on a miss. Requires freeze.
  const float* find(uint64_t uid, uint32_t sid) const;
  // Stored record, or zeros with the miss counter bumped.
  numerics::Matrix lookup_or_zero(uint64_t uid, uint32_t sid) const;

  size_t d() const { return d_; }
  size_t size() const { return uids_.size(); }
  size_t collisions() const { return side_.size(); }
  bool frozen() const { return frozen_; }
  KeyFn key_fn() const { return key_fn_; }
  uint64_t params_checksum() const { return checksum_; }
  uint64_t misses() const { return misses_.load(std::memory_order_relaxed); }

  // Record i in insertion order.
  uint64_t uid_at(size_t i) const { return uids_[i]; }
  uint32_t sid_at(size_t i) const { return sids_[i]; }
  std::span<const float> values_at(size_t i) const {
    return {values_.data() + i * 2 * d_, 2 * d_};
  }

 private:
  size_t d_ = 0;
  uint64_t checksum_ = 0;
  bool frozen_ = false;
  KeyFn key_fn_ = &make_key;
  std::vector<uint64_t> uids_;
  std::vector<uint32_t> sids_;
  std::vector<float> values_;
  // Open-addressing index, linear probing, capacity a power of two kept at
  // least twice the record count. index == 0 marks an empty slot.
  struct Slot {
    uint64_t key = 0;
    uint64_t uid = 0;
    uint32_t sid = 0;
    uint32_t index = 0;  // record index + 1
  };
  Slot* probe(uint64_t key);
  const Slot* probe(uint64_t key) const;
  void grow();
  std::vector<Slot> slots_;
  std::map<std::pair<uint64_t, uint32_t>, uint32_t> side_;
  mutable std::atomic<uint64_t> misses_{0};
};

// UXES: magic, u16 version, u32 d, u64 record count, u64 params checksum,
// u64 side-table count; then per record (u64 key, 2d f32); then per record
// (u64 uid, u32 sid); then the side-table as record indices (u32).
std::vector<uint8_t> serialize_store(const EmbeddingStore& store);
EmbeddingStore deserialize_store(std::span<const uint8_t> bytes);
void save_store(const EmbeddingStore& store, const std::string& path);
EmbeddingStore load_store(const std::string& path);

}  // namespace uxsid::serving

#endif  // UXSID_SERVING_STORE_H_
