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

#ifndef UXSID_TRAINER_ADAM_H_
#define UXSID_TRAINER_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "uxsid/numerics/matrix.h"

namespace uxsid::trainer {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::span<const numerics::Param> params, AdamOptions options);

  // Applies one update from params[i].grad. A non-finite gradient skips the
  // step entirely (state untouched) and returns false.
  bool step(std::span<numerics::Param> params);

  uint64_t steps() const { return t_; }
  uint64_t skipped() const { return skipped_; }
  const std::vector<numerics::Matrix>& first_moment() const { return m_; }
  const std::vector<numerics::Matrix>& second_moment() const { return v_; }

 private:
  AdamOptions options_;
  std::vector<numerics::Matrix> m_, v_;
  uint64_t t_ = 0;
  uint64_t skipped_ = 0;
};

}  // namespace uxsid::trainer

#endif  // UXSID_TRAINER_ADAM_H_
