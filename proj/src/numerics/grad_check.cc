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

#include "uxsid/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "uxsid/common/error.h"

namespace uxsid::numerics {
namespace {

double checked(double v, const std::string& where) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                "grad_check aborted: non-finite loss at " + where);
  }
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss_fn,
                           std::span<BasicParam<double>* const> params,
                           const GradCheckOptions& options) {
  checked(loss_fn(true), "base point");
  std::vector<MatrixD> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  const double h = options.step;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi]->value.values();
    for (size_t e = 0; e < values.size(); ++e) {
      const double saved = values[e];
      values[e] = saved + h;
      const double up = checked(loss_fn(false), params[pi]->name);
      values[e] = saved - h;
      const double down = checked(loss_fn(false), params[pi]->name);
      values[e] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].values()[e];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.entries_checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = params[pi]->name;
          report.worst_entry = e;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace uxsid::numerics
