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

#ifndef UXSID_BASELINES_COMPARE_H_
#define UXSID_BASELINES_COMPARE_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uxsid/model/config.h"
#include "uxsid/sidgen/codebook.h"
#include "uxsid/synthdata/dataset.h"

namespace uxsid::baselines {

struct CompareRow {
  size_t length = 0;
  model::Variant variant = model::Variant::kUxsid;
  std::optional<double> auc, uauc, wuauc;
  size_t best_epoch = 0;
};

struct CompareOptions {
  std::vector<size_t> lengths{100, 1000, 2000, 10000};
  std::vector<model::Variant> variants{model::Variant::kUxsid, model::Variant::kDin,
                                       model::Variant::kSimHard, model::Variant::kSimSoft};
  model::ModelConfig base;  // variant and max_history are overridden per run
  size_t threads = 1;
  std::function<void(const CompareRow&)> on_row;
};

// Trains every variant with the behavior sequence cut to its last `length`
// entries and reports test metrics. DIN keeps its own din_window inside that
// cut. Rows are ordered by length, then variant.
std::vector<CompareRow> compare_baselines(const synthdata::Dataset& ds, const sidgen::Codebook& codebook,
                                          const CompareOptions& options);

// CSV with header length,model,test_auc,test_uauc,test_wuauc,best_epoch.
std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace uxsid::baselines

#endif  // UXSID_BASELINES_COMPARE_H_
