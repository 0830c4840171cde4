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

#ifndef UXSID_COMMON_LOG_H_
#define UXSID_COMMON_LOG_H_

#include <functional>
#include <string>

namespace uxsid {

using LogSink = std::function<void(const std::string&)>;

// Process-wide sink for progress messages. Defaults to discarding them; the
// command line installs a stderr sink.
void set_log_sink(LogSink sink);
void log_info(const std::string& message);

}  // namespace uxsid

#endif  // UXSID_COMMON_LOG_H_
