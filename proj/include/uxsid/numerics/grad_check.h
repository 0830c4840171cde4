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

#ifndef UXSID_NUMERICS_GRAD_CHECK_H_
#define UXSID_NUMERICS_GRAD_CHECK_H_

#include <functional>
#include <span>
#include <string>

#include "uxsid/numerics/matrix.h"

namespace uxsid::numerics {

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  // entries whose true gradient is ~0 from dividing noise by noise.
  double floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  size_t entries_checked = 0;
  std::string worst_param;
  size_t worst_entry = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

// Evaluates loss_fn at the current parameter values. With `true` it must also
// leave the analytic gradient in each param's grad (zeroing first).
using LossFn = std::function<double(bool with_gradients)>;

// Compares every parameter entry against the central difference
// (f(x+h) - f(x-h)) / 2h. A non-finite loss aborts with an Error.
GradCheckReport grad_check(const LossFn& loss_fn,
                           std::span<BasicParam<double>* const> params,
                           const GradCheckOptions& options = {});

}  // namespace uxsid::numerics

#endif  // UXSID_NUMERICS_GRAD_CHECK_H_
