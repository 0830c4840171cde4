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

#include "uxsid/model/network.h"

#include <cmath>
#include <memory>

#include "uxsid/baselines/retrieval.h"
#include "uxsid/common/error.h"
#include "uxsid/common/parallel.h"
#include "uxsid/numerics/kernels.h"

namespace uxsid::model {

namespace ad = numerics::ad;

template <typename T>
Var Net<T>::p(size_t index) {
  if (index >= leaves_.size()) throw StateError("parameter missing for this model variant");
  if (!leaves_[index].valid()) leaves_[index] = tape.param(ps.params[index], index);
  return leaves_[index];
}

namespace {

template <typename T>
T inv_sqrt(size_t d) {
  return static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
}

template <typename T>
Var linear(Net<T>& net, Var x, size_t w, size_t b) {
  Var y = ad::matmul(net.tape, x, net.p(w));
  return b == kAbsent ? y : ad::add_row(net.tape, y, net.p(b));
}

}  // namespace

template <typename T>
Var attend(Tape<T>& t, Var q, Var k, Var v, T scale, Var* scores) {
  Var s = ad::softmax_rows(t, ad::scale(t, ad::matmul_bt(t, q, k), scale));
  if (scores != nullptr) *scores = s;
  return ad::matmul(t, s, v);
}

template <typename T>
Var iaic_compress(Net<T>& net, Var e_seq) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  const size_t d = net.config().d;
  if (t.value(e_seq).rows() == 0) throw InvalidArgument("iaic_compress: empty sequence");
  Var q = ad::matmul(t, net.p(x.anchors), net.p(x.iaic_wq));
  Var k = ad::matmul(t, e_seq, net.p(x.iaic_wk));
  Var v = ad::matmul(t, e_seq, net.p(x.iaic_wv));
  return anchor_ffn(net, attend(t, q, k, v, inv_sqrt<T>(d)));
}

template <typename T>
Var anchor_ffn(Net<T>& net, Var h) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  Var z1 = ad::add(t, ad::blockwise_matmul(t, h, net.p(x.ffn_w1)), net.p(x.ffn_b1));
  Var z2 = ad::add(t, ad::blockwise_matmul(t, ad::sigmoid(t, z1), net.p(x.ffn_w2)), net.p(x.ffn_b2));
  return ad::layer_norm_rows(t, ad::add(t, h, z2), net.p(x.ln_gain), net.p(x.ln_bias),
                             static_cast<T>(numerics::kLayerNormEps));
}

template <typename T>
Var ortho_loss(Tape<T>& t, Var p, OrthoMode mode) {
  if (mode == OrthoMode::kCosine) {
    Var n = ad::row_normalize(t, p);
    return ad::frobenius(t, ad::add_identity(t, ad::matmul_bt(t, n, n), T{-1}));
  }
  Var norm2 = ad::sum_squares(t, p);
  if (!(t.value(norm2)(0, 0) > T{0})) throw InvalidArgument("ortho_loss: anchor matrix is zero");
  Var gram = ad::div_scalar(t, ad::matmul_bt(t, p, p), norm2);
  return ad::frobenius(t, ad::add_identity(t, gram, T{-1}));
}

template <typename T>
Var explicit_probe(Net<T>& net, Var c_target, Var e_seq, Var* scores) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  Var q = ad::matmul(t, c_target, net.p(x.global_wq));
  Var k = ad::matmul(t, e_seq, net.p(x.global_wk));
  Var v = ad::matmul(t, e_seq, net.p(x.global_wv));
  return attend(t, q, k, v, inv_sqrt<T>(net.config().d), scores);
}

template <typename T>
Var gated_latent_probe(Net<T>& net, Var c_target, Var e_global, Var p, Var* scores, Var* gate) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  Var hidden = ad::sigmoid(t, linear(net, e_global, x.gate_w1, x.gate_b1));
  Var g = ad::sigmoid(t, linear(net, hidden, x.gate_w2, x.gate_b2));
  if (gate != nullptr) *gate = g;
  Var q = ad::matmul(t, ad::hadamard(t, c_target, g), net.p(x.local_wq));
  Var k = ad::matmul(t, p, net.p(x.local_wk));
  Var v = ad::matmul(t, p, net.p(x.local_wv));
  return attend(t, q, k, v, inv_sqrt<T>(net.config().d), scores);
}

template <typename T>
Var online_attention(Net<T>& net, Var query_in, Var e_global, Var e_local) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  Var q = ad::matmul(t, query_in, net.p(x.online_wq));
  Var kg = ad::matmul(t, e_global, net.p(x.online_wk));
  Var kl = ad::matmul(t, e_local, net.p(x.online_wk));
  Var vg = ad::matmul(t, e_global, net.p(x.online_wv));
  Var vl = ad::matmul(t, e_local, net.p(x.online_wv));
  const std::vector<Var> parts = {ad::row_dot(t, q, kg), ad::row_dot(t, q, kl)};
  Var w = ad::softmax_rows(t, ad::scale(t, ad::concat_cols<T>(t, parts), inv_sqrt<T>(net.config().d)));
  return ad::add(t, ad::scale_rows(t, vg, ad::select_col(t, w, 0)),
                 ad::scale_rows(t, vl, ad::select_col(t, w, 1)));
}

template <typename T>
Var target_attention(Net<T>& net, Var query_in, Var seq_emb, Var* scores) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  if (t.value(seq_emb).rows() == 0) throw InvalidArgument("target_attention: empty sequence");
  Var q = ad::matmul(t, query_in, net.p(x.att_wq));
  Var k = ad::matmul(t, seq_emb, net.p(x.att_wk));
  Var v = ad::matmul(t, seq_emb, net.p(x.att_wv));
  return attend(t, q, k, v, inv_sqrt<T>(net.config().d), scores);
}

template <typename T>
Var head_logits(Net<T>& net, Var features) {
  auto& t = net.tape;
  const auto& x = net.ps.idx;
  const size_t want = net.config().head_input_width();
  if (t.value(features).cols() != want)
    throw DimensionError("head input width " + std::to_string(t.value(features).cols()) +
                         " != " + std::to_string(want));
  Var h = features;
  for (size_t l = 0; l < x.head_w.size(); ++l) {
    h = linear(net, h, x.head_w[l], x.head_b[l]);
    if (l + 1 < x.head_w.size()) h = ad::relu(t, h);
  }
  return h;
}

std::span<const int32_t> visible_history(const ModelConfig& c, std::span<const int32_t> history) {
  if (c.max_history == 0 || history.size() <= c.max_history) return history;
  return history.subspan(history.size() - c.max_history);
}

template <typename T>
GroupForward forward_group(Net<T>& net, const Vocab& vocab, const GroupInput& in) {
  auto& t = net.tape;
  const auto& ps = net.ps;
  const auto& x = ps.idx;
  const ModelConfig& c = ps.config;
  const auto seq = visible_history(c, in.history);
  const size_t n = in.targets.size();
  if (seq.empty()) throw InvalidArgument("empty behavior history");
  if (n == 0) throw InvalidArgument("no targets to score");
  if (in.user < 0 || static_cast<size_t>(in.user) >= vocab.num_users())
    throw NotFound("unknown user index " + std::to_string(in.user));
  std::vector<int32_t> sids(n);
  for (size_t i = 0; i < n; ++i) {
    const int32_t item = in.targets[i];
    if (item < 0 || static_cast<size_t>(item) >= vocab.num_items())
      throw NotFound("unknown item index " + std::to_string(item));
    sids[i] = vocab.item_sid[static_cast<size_t>(item)];
  }
  for (int32_t item : seq)
    if (item < 0 || static_cast<size_t>(item) >= vocab.num_items())
      throw NotFound("unknown item index " + std::to_string(item));

  GroupForward out;
  out.seq_begin = in.history.size() - seq.size();
  const size_t len = seq.size();
  Var e = ad::gather_rows(t, ps.at(x.item_emb), x.item_emb, seq);
  Var item = ad::gather_rows(t, ps.at(x.item_emb), x.item_emb, std::span<const int32_t>(in.targets));
  Var sid = ad::gather_rows(t, ps.at(x.sid_emb), x.sid_emb, std::span<const int32_t>(sids));
  const int32_t user = in.user;
  Var u = ad::broadcast_rows(
      t, ad::gather_rows(t, ps.at(x.user_emb), x.user_emb, std::span<const int32_t>(&user, 1)), n);
  const size_t sw = std::min(c.short_window, len);
  Var short_term = ad::broadcast_rows(t, ad::mean_rows(t, e, len - sw, len), n);
  const std::vector<Var> query_parts = {item, sid};
  Var query = ad::concat_cols<T>(t, query_parts);

  std::vector<Var> features = {item, sid, u, short_term};
  switch (c.variant) {
    case Variant::kUxsid: {
      out.p = iaic_compress(net, e);
      out.ortho = ortho_loss(t, out.p, c.ortho_mode);
      out.e_global = explicit_probe(net, sid, e, &out.global_scores);
      out.e_local = gated_latent_probe(net, sid, out.e_global, out.p, &out.local_scores, &out.gate);
      features.push_back(out.e_global);
      features.push_back(out.e_local);
      features.push_back(online_attention(net, query, out.e_global, out.e_local));
      break;
    }
    case Variant::kDin: {
      const size_t w = std::min(c.din_window, len);
      Var window = ad::slice_rows(t, e, len - w, len);
      features.push_back(target_attention(net, query, window, &out.global_scores));
      break;
    }
    case Variant::kSimHard:
    case Variant::kSimSoft: {
      std::vector<int32_t> categories;
      if (c.variant == Variant::kSimHard) {
        categories.reserve(len);
        for (int32_t i : seq) categories.push_back(vocab.item_category[static_cast<size_t>(i)]);
      }
      std::vector<Var> rows;
      for (size_t r = 0; r < n; ++r) {
        const auto picked =
            c.variant == Variant::kSimHard
                ? baselines::gsu_hard(categories, vocab.item_category[static_cast<size_t>(in.targets[r])], c.gsu_r)
                : baselines::gsu_soft<T>(t.value(e), t.value(item).row(r), c.gsu_r);
        if (picked.positions.empty()) {
          rows.push_back(t.constant(BasicMatrix<T>(1, c.d)));
          continue;
        }
        Var sub = ad::gather_var_rows(t, e, std::span<const int32_t>(picked.positions));
        rows.push_back(target_attention(net, ad::slice_rows(t, query, r, r + 1), sub));
      }
      features.push_back(ad::concat_rows<T>(t, rows));
      break;
    }
  }
  out.logits = head_logits(net, ad::concat_cols<T>(t, features));
  return out;
}

template <typename T>
LossParts joint_loss(ParamSet<T>& ps, const Vocab& vocab, std::span<const GroupInput> groups,
                     bool with_gradients, size_t threads) {
  size_t total = 0;
  for (const auto& g : groups) {
    if (g.labels.size() != g.targets.size()) throw InvalidArgument("labels/targets size mismatch");
    total += g.targets.size();
  }
  if (total == 0) throw InvalidArgument("joint_loss: empty batch");
  const T inv_b = static_cast<T>(1.0 / static_cast<double>(total));
  const T lambda = static_cast<T>(ps.config.lambda);
  const bool uxsid = ps.config.variant == Variant::kUxsid;

  std::vector<double> bce(groups.size()), ortho(groups.size());
  std::vector<std::unique_ptr<GradientBuffer<T>>> buffers(groups.size());
  parallel_for(groups.size(), threads, [&](size_t gi) {
    const GroupInput& g = groups[gi];
    auto buffer = with_gradients ? std::make_unique<GradientBuffer<T>>(ps.params.size()) : nullptr;
    Tape<T> tape(with_gradients, buffer.get());
    Net<T> net(tape, ps);
    GroupForward f = forward_group(net, vocab, g);
    Var bce_sum = ad::bce_logit_pair_sum<T>(tape, f.logits, g.labels);
    bce[gi] = static_cast<double>(tape.value(bce_sum)(0, 0));
    Var loss = ad::scale(tape, bce_sum, inv_b);
    if (uxsid) {
      ortho[gi] = static_cast<double>(tape.value(f.ortho)(0, 0)) * static_cast<double>(g.targets.size());
      if (lambda > T{0})
        loss = ad::add(tape, loss,
                       ad::scale(tape, f.ortho, lambda * static_cast<T>(g.targets.size()) * inv_b));
    }
    if (with_gradients) {
      tape.backward(loss);
      buffers[gi] = std::move(buffer);
    }
  });

  LossParts parts;
  parts.examples = total;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    parts.bce_sum += bce[gi];
    parts.ortho_weighted_sum += ortho[gi];
  }
  const double n = static_cast<double>(total);
  parts.total = parts.bce_sum / n + ps.config.lambda * parts.ortho_weighted_sum / n;
  if (with_gradients) {
    for (auto& p : ps.params) p.zero_grad();
    for (const auto& b : buffers) b->add_to(ps.params);
  }
  return parts;
}

std::vector<float> probabilities(const numerics::Matrix& logits) {
  if (logits.cols() != 2) throw DimensionError("probabilities: expected two logits per row");
  std::vector<float> p(logits.rows());
  for (size_t i = 0; i < logits.rows(); ++i) p[i] = numerics::sigmoid(logits(i, 1) - logits(i, 0));
  return p;
}

#define UXSID_INSTANTIATE_NETWORK(T)                                                  \
  template class Net<T>;                                                              \
  template Var attend(Tape<T>&, Var, Var, Var, T, Var*);                              \
  template Var iaic_compress(Net<T>&, Var);                                           \
  template Var anchor_ffn(Net<T>&, Var);                                              \
  template Var ortho_loss(Tape<T>&, Var, OrthoMode);                                  \
  template Var explicit_probe(Net<T>&, Var, Var, Var*);                               \
  template Var gated_latent_probe(Net<T>&, Var, Var, Var, Var*, Var*);                \
  template Var online_attention(Net<T>&, Var, Var, Var);                              \
  template Var target_attention(Net<T>&, Var, Var, Var*);                             \
  template Var head_logits(Net<T>&, Var);                                             \
  template GroupForward forward_group(Net<T>&, const Vocab&, const GroupInput&);      \
  template LossParts joint_loss(ParamSet<T>&, const Vocab&, std::span<const GroupInput>, \
                                bool, size_t);

UXSID_INSTANTIATE_NETWORK(float)
UXSID_INSTANTIATE_NETWORK(double)

#undef UXSID_INSTANTIATE_NETWORK

}  // namespace uxsid::model
