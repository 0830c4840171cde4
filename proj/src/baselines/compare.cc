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

#include "uxsid/baselines/compare.h"

#include <cstdio>

#include "uxsid/common/error.h"
#include "uxsid/common/log.h"
#include "uxsid/model/model.h"
#include "uxsid/trainer/trainer.h"

namespace uxsid::baselines {

std::vector<CompareRow> compare_baselines(const synthdata::Dataset& ds, const sidgen::Codebook& codebook,
                                          const CompareOptions& options) {
  if (options.lengths.empty() || options.variants.empty())
    throw InvalidArgument("compare-baselines needs at least one length and one variant");
  for (size_t l : options.lengths)
    if (l == 0) throw InvalidArgument("compare-baselines lengths must be >= 1");
  const model::Vocab vocab = trainer::vocab_from_dataset(ds, codebook);
  const trainer::BoundData data = trainer::bind(vocab, ds);
  std::vector<CompareRow> rows;
  for (size_t length : options.lengths) {
    for (model::Variant v : options.variants) {
      model::ModelConfig c = options.base;
      c.variant = v;
      c.max_history = length;
      c.sid_codewords = codebook.codewords();
      c.sid_levels = codebook.num_levels();
      log_info(std::string("compare: training ") + model::variant_name(v) + " at length " + std::to_string(length));
      trainer::TrainOptions to;
      to.threads = options.threads;
      const auto trained = trainer::train(model::create_model(c, vocab), data, to);
      const auto test = trainer::evaluate(trained.model, data, synthdata::Split::kTest, options.threads);
      CompareRow row{length, v, test.auc, test.uauc, test.wuauc, trained.best_epoch};
      if (options.on_row) options.on_row(row);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  auto fmt = [](std::optional<double> v) {
    if (!v) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  std::string out = "length,model,test_auc,test_uauc,test_wuauc,best_epoch\n";
  for (const auto& r : rows)
    out += std::to_string(r.length) + "," + model::variant_name(r.variant) + "," + fmt(r.auc) + "," + fmt(r.uauc) +
           "," + fmt(r.wuauc) + "," + std::to_string(r.best_epoch) + "\n";
  return out;
}

}  // namespace uxsid::baselines
