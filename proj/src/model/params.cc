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

#include "uxsid/model/params.h"

#include <cmath>

#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/hash.h"
#include "uxsid/common/rng.h"

namespace uxsid::model {

template <typename T>
size_t ParamSet<T>::index_of(const std::string& name) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  throw NotFound("no parameter named " + name);
}

template struct ParamSet<float>;
template struct ParamSet<double>;

namespace {

class Builder {
 public:
  Builder(ParamSet<float>& ps, uint64_t seed) : ps_(ps), rng_(seed) {}

  size_t normal(const std::string& name, size_t rows, size_t cols, double stddev) {
    Matrix m(rows, cols);
    for (float& v : m.values()) v = static_cast<float>(rng_.normal(0.0, stddev));
    return add(name, std::move(m));
  }

  // Xavier uniform; a (blocks*fan_in) x fan_out tensor is one matrix per block.
  size_t xavier(const std::string& name, size_t rows, size_t cols, size_t blocks = 1) {
    const double fan_in = static_cast<double>(rows / blocks);
    const double bound = std::sqrt(6.0 / (fan_in + static_cast<double>(cols)));
    Matrix m(rows, cols);
    for (float& v : m.values()) v = static_cast<float>(rng_.uniform(-bound, bound));
    return add(name, std::move(m));
  }

  size_t constant(const std::string& name, size_t rows, size_t cols, float value) {
    return add(name, Matrix(rows, cols, value));
  }

 private:
  size_t add(const std::string& name, Matrix m) {
    ps_.params.emplace_back(name, std::move(m));
    return ps_.params.size() - 1;
  }
  ParamSet<float>& ps_;
  Rng rng_;
};

}  // namespace

ParamSet<float> init_params(const ModelConfig& c, size_t num_items, size_t num_sids,
                            size_t num_users, uint64_t seed) {
  c.validate();
  if (num_items == 0 || num_sids == 0 || num_users == 0)
    throw InvalidArgument("vocabulary sizes must be >= 1");
  ParamSet<float> ps;
  ps.config = c;
  Builder b(ps, seed);
  ParamIndex& x = ps.idx;
  const size_t d = c.d, k = c.num_anchors;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
  x.item_emb = b.normal("item_emb", num_items, d, emb_std);
  x.sid_emb = b.normal("sid_emb", num_sids, d, emb_std);
  x.user_emb = b.normal("user_emb", num_users, d, emb_std);
  if (c.variant == Variant::kUxsid) {
    x.anchors = b.normal("iaic.anchors", k, d, emb_std);
    x.iaic_wq = b.xavier("iaic.wq", d, d);
    x.iaic_wk = b.xavier("iaic.wk", d, d);
    x.iaic_wv = b.xavier("iaic.wv", d, d);
    x.ffn_w1 = b.xavier("iaic.ffn.w1", k * d, c.d_ff, k);
    x.ffn_b1 = b.constant("iaic.ffn.b1", k, c.d_ff, 0.0f);
    x.ffn_w2 = b.xavier("iaic.ffn.w2", k * c.d_ff, d, k);
    x.ffn_b2 = b.constant("iaic.ffn.b2", k, d, 0.0f);
    x.ln_gain = b.constant("iaic.ln.gain", k, d, 1.0f);
    x.ln_bias = b.constant("iaic.ln.bias", k, d, 0.0f);
    x.global_wq = b.xavier("global.wq", d, d);
    x.global_wk = b.xavier("global.wk", d, d);
    x.global_wv = b.xavier("global.wv", d, d);
    x.gate_w1 = b.xavier("gate.w1", d, c.d_g);
    x.gate_b1 = b.constant("gate.b1", 1, c.d_g, 0.0f);
    x.gate_w2 = b.xavier("gate.w2", c.d_g, d);
    x.gate_b2 = b.constant("gate.b2", 1, d, 0.0f);
    x.local_wq = b.xavier("local.wq", d, d);
    x.local_wk = b.xavier("local.wk", d, d);
    x.local_wv = b.xavier("local.wv", d, d);
    x.online_wq = b.xavier("online.wq", 2 * d, d);
    x.online_wk = b.xavier("online.wk", d, d);
    x.online_wv = b.xavier("online.wv", d, d);
  } else {
    x.att_wq = b.xavier("att.wq", 2 * d, d);
    x.att_wk = b.xavier("att.wk", d, d);
    x.att_wv = b.xavier("att.wv", d, d);
  }
  size_t in = c.head_input_width();
  std::vector<size_t> widths = c.head_hidden;
  widths.push_back(2);
  for (size_t l = 0; l < widths.size(); ++l) {
    x.head_w.push_back(b.xavier("head.w" + std::to_string(l), in, widths[l]));
    x.head_b.push_back(b.constant("head.b" + std::to_string(l), 1, widths[l], 0.0f));
    in = widths[l];
  }
  return ps;
}

ParamIndex index_params(const std::vector<std::string>& names, size_t head_layers) {
  ParamIndex x;
  auto find = [&](const std::string& name) {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return kAbsent;
  };
  x.item_emb = find("item_emb");
  x.sid_emb = find("sid_emb");
  x.user_emb = find("user_emb");
  x.anchors = find("iaic.anchors");
  x.iaic_wq = find("iaic.wq");
  x.iaic_wk = find("iaic.wk");
  x.iaic_wv = find("iaic.wv");
  x.ffn_w1 = find("iaic.ffn.w1");
  x.ffn_b1 = find("iaic.ffn.b1");
  x.ffn_w2 = find("iaic.ffn.w2");
  x.ffn_b2 = find("iaic.ffn.b2");
  x.ln_gain = find("iaic.ln.gain");
  x.ln_bias = find("iaic.ln.bias");
  x.global_wq = find("global.wq");
  x.global_wk = find("global.wk");
  x.global_wv = find("global.wv");
  x.gate_w1 = find("gate.w1");
  x.gate_b1 = find("gate.b1");
  x.gate_w2 = find("gate.w2");
  x.gate_b2 = find("gate.b2");
  x.local_wq = find("local.wq");
  x.local_wk = find("local.wk");
  x.local_wv = find("local.wv");
  x.online_wq = find("online.wq");
  x.online_wk = find("online.wk");
  x.online_wv = find("online.wv");
  x.att_wq = find("att.wq");
  x.att_wk = find("att.wk");
  x.att_wv = find("att.wv");
  for (size_t l = 0; l < head_layers; ++l) {
    x.head_w.push_back(find("head.w" + std::to_string(l)));
    x.head_b.push_back(find("head.b" + std::to_string(l)));
  }
  return x;
}

uint64_t params_checksum(const ParamSet<float>& ps) {
  ByteWriter w;
  w.put_bytes(model_config_to_json(ps.config));
  for (const auto& p : ps.params) {
    w.put_bytes(p.name);
    w.put_u64(p.value.rows());
    w.put_u64(p.value.cols());
    w.put_f32s(p.value.values());
  }
  return fnv1a64(w.bytes());
}

}  // namespace uxsid::model
