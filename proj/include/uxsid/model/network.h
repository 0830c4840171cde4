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

#ifndef UXSID_MODEL_NETWORK_H_
#define UXSID_MODEL_NETWORK_H_

#include <cstdint>
#include <span>
#include <vector>

#include "uxsid/model/params.h"
#include "uxsid/numerics/autodiff.h"

namespace uxsid::model {

using numerics::GradientBuffer;
using numerics::Tape;
using numerics::Var;

// Id mappings and per-item side information; all model code works on the
// dense indices.
struct Vocab {
  std::vector<int64_t> item_ids;
  std::vector<int32_t> item_sid;       // first-layer SID per item
  std::vector<int32_t> item_category;  // used by the category GSU
  std::vector<int64_t> user_ids;
  size_t num_sids = 0;

  size_t num_items() const { return item_ids.size(); }
  size_t num_users() const { return user_ids.size(); }
};

// Parameter leaves for one tape, created on first use.
template <typename T>
class Net {
 public:
  Net(Tape<T>& tape, const ParamSet<T>& ps)
      : tape(tape), ps(ps), leaves_(ps.params.size()) {}

  Var p(size_t index);
  const ModelConfig& config() const { return ps.config; }

  Tape<T>& tape;
  const ParamSet<T>& ps;

 private:
  std::vector<Var> leaves_;
};

// softmax(q k^T * scale) v; the score matrix is returned through `scores`.
template <typename T>
Var attend(Tape<T>& t, Var q, Var k, Var v, T scale, Var* scores = nullptr);

// Anchor cross-attention over E (L x d) followed by the per-anchor
// FFN with residual and layer norm. Returns P (K x d).
template <typename T>
Var iaic_compress(Net<T>& net, Var e_seq);

// Row k of H through anchor k's own FFN, residual and layer norm.
template <typename T>
Var anchor_ffn(Net<T>& net, Var h);

// || P P^T / ||P||_F^2 - I ||_F, or the row-cosine variant. Throws on P = 0.
template <typename T>
Var ortho_loss(Tape<T>& t, Var p, OrthoMode mode);

// Target SID rows (n x d) attend over the raw behaviors. Returns e_global
// (n x d); `scores` receives the n x L attention weights.
template <typename T>
Var explicit_probe(Net<T>& net, Var c_target, Var e_seq, Var* scores = nullptr);

// Gate from e_global, masked SID query, attention over the anchors.
template <typename T>
Var gated_latent_probe(Net<T>& net, Var c_target, Var e_global, Var p,
                       Var* scores = nullptr, Var* gate = nullptr);

// Query [item ; sid] (n x 2d) attends over the two cached vectors of each row.
template <typename T>
Var online_attention(Net<T>& net, Var query_in, Var e_global, Var e_local);

// Query [item ; sid] (n x 2d) attends over the rows of seq_emb (shared by
// every query row). Used for truncated attention and the ESU stage.
template <typename T>
Var target_attention(Net<T>& net, Var query_in, Var seq_emb, Var* scores = nullptr);

// MLP with ReLU hidden layers; n x 2 logits.
template <typename T>
Var head_logits(Net<T>& net, Var features);

// All impressions of one user scored against the same history prefix.
struct GroupInput {
  int32_t user = 0;
  std::span<const int32_t> history;  // time ordered, untruncated prefix
  std::vector<int32_t> targets;
  std::vector<float> labels;  // empty for inference
};

struct GroupForward {
  Var logits;
  Var p;          // anchors (UxSID only)
  Var ortho;      // 1 x 1 (UxSID only)
  Var e_global;   // n x d
  Var e_local;    // n x d
  Var global_scores;  // n x L
  Var local_scores;   // n x K
  Var gate;
  size_t seq_begin = 0;  // first history position seen after truncation
};

// The behaviors the model reads: the last max_history entries.
std::span<const int32_t> visible_history(const ModelConfig& c, std::span<const int32_t> history);

template <typename T>
GroupForward forward_group(Net<T>& net, const Vocab& vocab, const GroupInput& in);

struct LossParts {
  double total = 0.0;
  double bce_sum = 0.0;
  double ortho_weighted_sum = 0.0;  // sum over examples of ortho(P)
  size_t examples = 0;
};

// Mean BCE over all examples in `groups` plus lambda times the per-example
// mean ortho term. With gradients, params[i].grad receives d(loss)/d(param).
// Groups are evaluated independently and reduced in order.
template <typename T>
LossParts joint_loss(ParamSet<T>& ps, const Vocab& vocab, std::span<const GroupInput> groups,
                     bool with_gradients, size_t threads = 1);

// Positive-class probability sigma(l1 - l0) for each logit row.
std::vector<float> probabilities(const numerics::Matrix& logits);

}  // namespace uxsid::model

#endif  // UXSID_MODEL_NETWORK_H_
