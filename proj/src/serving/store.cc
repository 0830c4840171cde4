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

#include "uxsid/serving/store.h"

#include <algorithm>
#include <array>
#include <limits>
#include <unordered_map>
#include <utility>

#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/hash.h"
#include "uxsid/common/log.h"

namespace uxsid::serving {

namespace {

constexpr char kMagic[] = "UXES";
constexpr uint16_t kVersion = 1;

}  // namespace

uint64_t make_key(uint64_t uid, uint32_t sid) {
  std::array<uint8_t, 12> msg{};
  for (int i = 0; i < 8; ++i) msg[i] = static_cast<uint8_t>(uid >> (8 * i));
  for (int i = 0; i < 4; ++i) msg[8 + i] = static_cast<uint8_t>(sid >> (8 * i));
  return fnv1a64(msg);
}

EmbeddingStore::EmbeddingStore(size_t d, uint64_t params_checksum, KeyFn key_fn)
    : d_(d), checksum_(params_checksum), key_fn_(key_fn) {
  if (d == 0) throw InvalidArgument("embedding store needs d >= 1");
}

EmbeddingStore::EmbeddingStore(const EmbeddingStore& o)
    : d_(o.d_), checksum_(o.checksum_), frozen_(o.frozen_), key_fn_(o.key_fn_), uids_(o.uids_), sids_(o.sids_),
      values_(o.values_), slots_(o.slots_), side_(o.side_), misses_(o.misses()) {}

EmbeddingStore& EmbeddingStore::operator=(const EmbeddingStore& o) {
  if (this != &o) {
    d_ = o.d_;
    checksum_ = o.checksum_;
    frozen_ = o.frozen_;
    key_fn_ = o.key_fn_;
    uids_ = o.uids_;
    sids_ = o.sids_;
    values_ = o.values_;
    slots_ = o.slots_;
    side_ = o.side_;
    misses_.store(o.misses());
  }
  return *this;
}

EmbeddingStore::Slot* EmbeddingStore::probe(uint64_t key) {
  return const_cast<Slot*>(std::as_const(*this).probe(key));
}

const EmbeddingStore::Slot* EmbeddingStore::probe(uint64_t key) const {
  const size_t mask = slots_.size() - 1;
  for (size_t i = key & mask;; i = (i + 1) & mask) {
    const Slot& s = slots_[i];
    if (s.index == 0 || s.key == key) return &s;
  }
}

void EmbeddingStore::grow() {
  std::vector<Slot> old = std::move(slots_);
  slots_.assign(std::max<size_t>(16, old.size() * 2), Slot{});
  for (const Slot& s : old)
    if (s.index != 0) *probe(s.key) = s;
}

void EmbeddingStore::insert(uint64_t uid, uint32_t sid, std::span<const float> values) {
  if (frozen_) throw StateError("embedding store is frozen");
  if (values.size() != 2 * d_) throw DimensionError("store record must hold 2*d floats");
  if (uids_.size() >= std::numeric_limits<uint32_t>::max() - 1) throw InvalidArgument("embedding store is full");
  if (2 * (uids_.size() + 1) > slots_.size()) grow();
  const uint32_t index = static_cast<uint32_t>(uids_.size());
  const uint64_t key = key_fn_(uid, sid);
  Slot* slot = probe(key);
  if (slot->index == 0) {
    *slot = Slot{key, uid, sid, index + 1};
  } else {
    if ((slot->uid == uid && slot->sid == sid) || side_.count({uid, sid}))
      throw InvalidArgument("duplicate store entry for uid " + std::to_string(uid) + " sid " +
                            std::to_string(sid));
    log_info("store: key collision between (" + std::to_string(uid) + "," + std::to_string(sid) + ") and (" +
             std::to_string(slot->uid) + "," + std::to_string(slot->sid) + ")");
    side_.emplace(std::make_pair(uid, sid), index);
  }
  uids_.push_back(uid);
  sids_.push_back(sid);
  values_.insert(values_.end(), values.begin(), values.end());
}

const float* EmbeddingStore::find(uint64_t uid, uint32_t sid) const {
  if (!frozen_) throw StateError("lookup on an unfrozen embedding store");
  if (slots_.empty()) return nullptr;
  const Slot* slot = probe(key_fn_(uid, sid));
  if (slot->index == 0) return nullptr;
  size_t index = slot->index - 1;
  if (slot->uid != uid || slot->sid != sid) {
    if (side_.empty()) return nullptr;
    auto s = side_.find({uid, sid});
    if (s == side_.end()) return nullptr;
    index = s->second;
  }
  return values_.data() + index * 2 * d_;
}

numerics::Matrix EmbeddingStore::lookup_or_zero(uint64_t uid, uint32_t sid) const {
  numerics::Matrix out(2, d_);
  if (const float* v = find(uid, sid)) {
    std::copy(v, v + 2 * d_, out.data());
  } else {
    misses_.fetch_add(1, std::memory_order_relaxed);
  }
  return out;
}

std::vector<uint8_t> serialize_store(const EmbeddingStore& store) {
  if (!store.frozen()) throw StateError("only a frozen store can be saved");
  if (store.key_fn() != &make_key) throw StateError("only stores keyed by make_key can be saved");
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u16(kVersion);
  w.put_u32(static_cast<uint32_t>(store.d()));
  w.put_u64(store.size());
  w.put_u64(store.params_checksum());
  std::vector<uint32_t> side;
  for (size_t i = 0; i < store.size(); ++i) {
    const float* hit = store.find(store.uid_at(i), store.sid_at(i));
    if (hit != store.values_at(i).data()) throw InternalError("store index is inconsistent");
  }
  // Side-table members are exactly the records the primary index does not point to.
  {
    std::unordered_map<uint64_t, bool> first;
    for (size_t i = 0; i < store.size(); ++i)
      if (!first.try_emplace(make_key(store.uid_at(i), store.sid_at(i)), true).second)
        side.push_back(static_cast<uint32_t>(i));
  }
  w.put_u64(side.size());
  for (size_t i = 0; i < store.size(); ++i) {
    w.put_u64(make_key(store.uid_at(i), store.sid_at(i)));
    w.put_f32s(store.values_at(i));
  }
  for (size_t i = 0; i < store.size(); ++i) {
    w.put_u64(store.uid_at(i));
    w.put_u32(store.sid_at(i));
  }
  for (uint32_t i : side) w.put_u32(i);
  return w.release();
}

EmbeddingStore deserialize_store(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "embedding store");
  if (r.str(4) != kMagic) throw FormatError("embedding store: bad magic");
  const uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("embedding store: unsupported version " + std::to_string(version));
  const size_t d = r.u32();
  const uint64_t count = r.u64();
  const uint64_t checksum = r.u64();
  const uint64_t side = r.u64();
  if (d == 0) throw FormatError("embedding store: d is 0");
  const uint64_t record_bytes = 8 + 8ull * d;
  if (side > count || r.remaining() != count * (record_bytes + 12) + side * 4)
    throw FormatError("truncated or oversized embedding store (header says " + std::to_string(count) +
                      " records)");
  std::vector<uint64_t> keys(count);
  std::vector<float> values(count * 2 * d);
  for (uint64_t i = 0; i < count; ++i) {
    keys[i] = r.u64();
    r.f32s(std::span<float>(values.data() + i * 2 * d, 2 * d));
  }
  EmbeddingStore store(d, checksum);
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t uid = r.u64();
    const uint32_t sid = r.u32();
    if (make_key(uid, sid) != keys[i]) throw FormatError("embedding store: key does not match its (uid, sid)");
    store.insert(uid, sid, std::span<const float>(values.data() + i * 2 * d, 2 * d));
  }
  if (store.collisions() != side) throw FormatError("embedding store: side-table size mismatch");
  std::unordered_map<uint64_t, bool> first;
  for (uint64_t i = 0; i < count; ++i) {
    if (first.try_emplace(keys[i], true).second) continue;
    if (r.u32() != i) throw FormatError("embedding store: side-table index mismatch");
  }
  store.freeze();
  return store;
}

void save_store(const EmbeddingStore& store, const std::string& path) {
  write_file_atomic(path, serialize_store(store));
}

EmbeddingStore load_store(const std::string& path) { return deserialize_store(read_file_bytes(path)); }

}  // namespace uxsid::serving
