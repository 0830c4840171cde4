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

#ifndef UXSID_COMMON_PARALLEL_H_
#define UXSID_COMMON_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace uxsid {

// Worker count from an explicit request, else UXSID_THREADS, else hardware.
size_t resolve_threads(size_t requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write results
// into per-index slots, so outputs never depend on the schedule.
void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn);

}  // namespace uxsid

#endif  // UXSID_COMMON_PARALLEL_H_
