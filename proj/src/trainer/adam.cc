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

#include "uxsid/trainer/adam.h"

#include <cmath>

#include "uxsid/common/error.h"
#include "uxsid/numerics/kernels.h"

namespace uxsid::trainer {

Adam::Adam(std::span<const numerics::Param> params, AdamOptions options) : options_(options) {
  if (!(options.learning_rate > 0.0)) throw InvalidArgument("adam: learning rate must be > 0");
  for (const auto& p : params) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

bool Adam::step(std::span<numerics::Param> params) {
  if (params.size() != m_.size()) throw DimensionError("adam: parameter count changed");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].grad.same_shape(m_[i])) throw DimensionError("adam: gradient shape mismatch");
    if (!numerics::all_finite(params[i].grad)) {
      ++skipped_;
      return false;
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value.values();
    auto grad = params[i].grad.values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = b1 * m[k] + (1.0 - b1) * g;
      const double vk = b2 * v[k] + (1.0 - b2) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = options_.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + options_.eps);
      value[k] = static_cast<float>(value[k] - update);
    }
  }
  return true;
}

}  // namespace uxsid::trainer
