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

#ifndef UXSID_COMMON_HASH_H_
#define UXSID_COMMON_HASH_H_

#include <cstdint>
#include <span>

namespace uxsid {

inline constexpr uint64_t kFnv1aOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnv1aPrime = 0x100000001b3ULL;

// FNV-1a 64-bit. `seed` lets callers continue a running hash.
constexpr uint64_t fnv1a64(std::span<const uint8_t> bytes,
                           uint64_t seed = kFnv1aOffsetBasis) {
  uint64_t h = seed;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= kFnv1aPrime;
  }
  return h;
}

}  // namespace uxsid

#endif  // UXSID_COMMON_HASH_H_
