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

#include "uxsid/baselines/attention.h"

#include <vector>

#include "uxsid/common/error.h"

namespace uxsid::baselines {

namespace {

namespace ad = numerics::ad;
using numerics::Var;

void check_items(const model::Model& m, std::span<const int32_t> items) {
  if (m.config.variant == model::Variant::kUxsid) throw StateError("target attention needs a din or sim model");
  for (int32_t i : items)
    if (i < 0 || static_cast<size_t>(i) >= m.vocab.num_items())
      throw NotFound("unknown item index " + std::to_string(i));
}

numerics::Matrix attend_rows(const model::Model& m, std::span<const int32_t> rows, int32_t target) {
  const auto& x = m.params.idx;
  model::Tape<float> tape;
  model::Net<float> net(tape, m.params);
  const int32_t sid = m.vocab.item_sid[static_cast<size_t>(target)];
  Var item = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, std::span<const int32_t>(&target, 1));
  Var c = ad::gather_rows(tape, m.params.at(x.sid_emb), x.sid_emb, std::span<const int32_t>(&sid, 1));
  const std::vector<Var> parts = {item, c};
  Var seq = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, rows);
  return tape.value(model::target_attention(net, ad::concat_cols<float>(tape, parts), seq));
}

}  // namespace

numerics::Matrix truncated_target_attention(const model::Model& m, std::span<const int32_t> history,
                                            int32_t target, size_t n) {
  if (n == 0) throw InvalidArgument("truncated attention needs n >= 1");
  if (history.empty()) throw InvalidArgument("truncated attention over an empty sequence");
  const int32_t t = target;
  check_items(m, std::span<const int32_t>(&t, 1));
  check_items(m, history);
  const size_t w = std::min(n, history.size());
  return attend_rows(m, history.subspan(history.size() - w), target);
}

EsuOutput esu_attention(const model::Model& m, std::span<const int32_t> history,
                        const RetrievedSubsequence& retrieved, int32_t target) {
  const int32_t t = target;
  check_items(m, std::span<const int32_t>(&t, 1));
  EsuOutput out;
  if (retrieved.positions.empty()) {
    out.value = numerics::Matrix(1, m.config.d);
    out.empty = true;
    return out;
  }
  std::vector<int32_t> rows;
  for (int32_t p : retrieved.positions) {
    if (p < 0 || static_cast<size_t>(p) >= history.size()) throw InvalidArgument("retrieved position out of range");
    rows.push_back(history[static_cast<size_t>(p)]);
  }
  check_items(m, rows);
  out.value = attend_rows(m, rows, target);
  return out;
}

}  // namespace uxsid::baselines
