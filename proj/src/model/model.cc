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

#include "uxsid/model/model.h"

#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"

namespace uxsid::model {

namespace ad = numerics::ad;

namespace {

constexpr char kMagic[] = "UXMD";
constexpr uint16_t kVersion = 1;

void check_uxsid(const Model& m) {
  if (m.config.variant != Variant::kUxsid)
    throw StateError(std::string("operation needs a uxsid model, got ") + variant_name(m.config.variant));
}

Matrix row_of(const Matrix& m, size_t r) { return Matrix::row_vector(m.row(r)); }

}  // namespace

Model create_model(const ModelConfig& config, Vocab vocab) {
  if (vocab.item_sid.size() != vocab.num_items() || vocab.item_category.size() != vocab.num_items())
    throw InvalidArgument("vocab side information does not cover every item");
  for (int32_t s : vocab.item_sid)
    if (s < 0 || static_cast<size_t>(s) >= vocab.num_sids) throw InvalidArgument("item SID out of range");
  Model m;
  m.config = config;
  m.params = init_params(config, vocab.num_items(), vocab.num_sids, vocab.num_users(), config.seed);
  m.vocab = std::move(vocab);
  return m;
}

std::vector<EmbedResult> uxsid_embed_many(const Model& m, std::span<const int32_t> history,
                                          std::span<const int32_t> sids) {
  check_uxsid(m);
  const auto& x = m.params.idx;
  const auto seq = visible_history(m.config, history);
  if (seq.empty()) throw InvalidArgument("uxsid_embed: empty behavior sequence");
  if (sids.empty()) return {};
  for (int32_t item : seq)
    if (item < 0 || static_cast<size_t>(item) >= m.vocab.num_items())
      throw NotFound("uxsid_embed: unknown item index " + std::to_string(item));
  for (int32_t s : sids)
    if (s < 0 || static_cast<size_t>(s) >= m.vocab.num_sids)
      throw InvalidArgument("uxsid_embed: SID " + std::to_string(s) + " out of range");
  Tape<float> tape;
  Net<float> net(tape, m.params);
  Var e = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, seq);
  Var c = ad::gather_rows(tape, m.params.at(x.sid_emb), x.sid_emb, sids);
  Var p = iaic_compress(net, e);
  Var gs, ls;
  Var eg = explicit_probe(net, c, e, &gs);
  Var el = gated_latent_probe(net, c, eg, p, &ls);
  std::vector<EmbedResult> out(sids.size());
  const size_t d = m.config.d;
  for (size_t i = 0; i < sids.size(); ++i) {
    EmbedResult& r = out[i];
    r.embedding = Matrix(2, d);
    std::copy(tape.value(eg).row(i).begin(), tape.value(eg).row(i).end(), r.embedding.row(0).begin());
    std::copy(tape.value(el).row(i).begin(), tape.value(el).row(i).end(), r.embedding.row(1).begin());
    r.global_scores.assign(tape.value(gs).row(i).begin(), tape.value(gs).row(i).end());
    r.local_scores.assign(tape.value(ls).row(i).begin(), tape.value(ls).row(i).end());
    r.anchors = tape.value(p);
    r.seq_begin = history.size() - seq.size();
  }
  return out;
}

EmbedResult uxsid_embed(const Model& m, std::span<const int32_t> history, int32_t sid) {
  return std::move(uxsid_embed_many(m, history, std::span<const int32_t>(&sid, 1))[0]);
}

std::vector<float> predict(const Model& m, const GroupInput& in) {
  Tape<float> tape;
  Net<float> net(tape, m.params);
  GroupForward f = forward_group(net, m.vocab, in);
  return probabilities(tape.value(f.logits));
}

Matrix online_rank(const Model& m, int32_t target_item, const Matrix& cached) {
  check_uxsid(m);
  const auto& x = m.params.idx;
  if (cached.rows() != 2 || cached.cols() != m.config.d) throw DimensionError("cached record must be 2 x d");
  if (target_item < 0 || static_cast<size_t>(target_item) >= m.vocab.num_items())
    throw NotFound("online_rank: unknown item index");
  const int32_t sid = m.vocab.item_sid[static_cast<size_t>(target_item)];
  Tape<float> tape;
  Net<float> net(tape, m.params);
  Var item = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, std::span<const int32_t>(&target_item, 1));
  Var c = ad::gather_rows(tape, m.params.at(x.sid_emb), x.sid_emb, std::span<const int32_t>(&sid, 1));
  const std::vector<Var> parts = {item, c};
  Var q = ad::concat_cols<float>(tape, parts);
  Var out = online_attention(net, q, tape.constant(row_of(cached, 0)), tape.constant(row_of(cached, 1)));
  return tape.value(out);
}

std::vector<float> predict_from_cache(const Model& m, int32_t user, std::span<const int32_t> history,
                                      std::span<const int32_t> targets,
                                      std::span<const Matrix> cached) {
  check_uxsid(m);
  const auto& x = m.params.idx;
  const auto seq = visible_history(m.config, history);
  if (seq.empty()) throw InvalidArgument("predict_from_cache: empty behavior sequence");
  if (targets.size() != cached.size() || targets.empty())
    throw InvalidArgument("predict_from_cache: one cached record per target required");
  if (user < 0 || static_cast<size_t>(user) >= m.vocab.num_users()) throw NotFound("unknown user index");
  const size_t n = targets.size();
  const size_t d = m.config.d;
  std::vector<int32_t> sids(n);
  Matrix eg(n, d), el(n, d);
  for (size_t i = 0; i < n; ++i) {
    if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= m.vocab.num_items())
      throw NotFound("unknown item index");
    if (cached[i].rows() != 2 || cached[i].cols() != d) throw DimensionError("cached record must be 2 x d");
    sids[i] = m.vocab.item_sid[static_cast<size_t>(targets[i])];
    std::copy(cached[i].row(0).begin(), cached[i].row(0).end(), eg.row(i).begin());
    std::copy(cached[i].row(1).begin(), cached[i].row(1).end(), el.row(i).begin());
  }
  const size_t sw = std::min(m.config.short_window, seq.size());
  const auto recent = seq.subspan(seq.size() - sw);

  Tape<float> tape;
  Net<float> net(tape, m.params);
  Var e_recent = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, recent);
  Var item = ad::gather_rows(tape, m.params.at(x.item_emb), x.item_emb, targets);
  Var sid = ad::gather_rows(tape, m.params.at(x.sid_emb), x.sid_emb, std::span<const int32_t>(sids));
  Var u = ad::broadcast_rows(
      tape, ad::gather_rows(tape, m.params.at(x.user_emb), x.user_emb, std::span<const int32_t>(&user, 1)), n);
  Var short_term = ad::broadcast_rows(tape, ad::mean_rows(tape, e_recent, 0, sw), n);
  const std::vector<Var> query_parts = {item, sid};
  Var query = ad::concat_cols<float>(tape, query_parts);
  Var g = tape.constant(std::move(eg));
  Var l = tape.constant(std::move(el));
  const std::vector<Var> features = {item, sid, u, short_term, g, l, online_attention(net, query, g, l)};
  return probabilities(tape.value(head_logits(net, ad::concat_cols<float>(tape, features))));
}

std::vector<uint8_t> serialize_model(const Model& m) {
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put_u16(kVersion);
  const std::string config = model_config_to_json(m.config);
  w.put_u32(static_cast<uint32_t>(config.size()));
  w.put_bytes(config);
  w.put_u64(m.vocab.num_items());
  w.put_u64(m.vocab.num_sids);
  w.put_u64(m.vocab.num_users());
  for (size_t i = 0; i < m.vocab.num_items(); ++i) {
    w.put_i64(m.vocab.item_ids[i]);
    w.put_u32(static_cast<uint32_t>(m.vocab.item_sid[i]));
    w.put_u32(static_cast<uint32_t>(m.vocab.item_category[i]));
  }
  for (int64_t u : m.vocab.user_ids) w.put_i64(u);
  w.put_u32(static_cast<uint32_t>(m.params.params.size()));
  for (const auto& p : m.params.params) {
    w.put_u32(static_cast<uint32_t>(p.name.size()));
    w.put_bytes(p.name);
    w.put_u32(static_cast<uint32_t>(p.value.rows()));
    w.put_u32(static_cast<uint32_t>(p.value.cols()));
    w.put_f32s(p.value.values());
  }
  return w.release();
}

Model deserialize_model(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "model checkpoint");
  if (r.str(4) != std::string_view(kMagic, 4)) throw FormatError("model checkpoint: bad magic");
  const uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("model checkpoint: unsupported version " + std::to_string(version));
  const uint32_t config_len = r.u32();
  Model m;
  m.config = model_config_from_json(r.str(config_len));
  const uint64_t n_items = r.u64();
  m.vocab.num_sids = r.u64();
  const uint64_t n_users = r.u64();
  if (n_items > r.remaining() / 16 || n_users > r.remaining() / 8)
    throw FormatError("truncated model checkpoint");
  for (uint64_t i = 0; i < n_items; ++i) {
    m.vocab.item_ids.push_back(r.i64());
    m.vocab.item_sid.push_back(static_cast<int32_t>(r.u32()));
    m.vocab.item_category.push_back(static_cast<int32_t>(r.u32()));
  }
  for (uint64_t i = 0; i < n_users; ++i) m.vocab.user_ids.push_back(r.i64());
  const uint32_t count = r.u32();
  std::vector<std::string> names;
  m.params.config = m.config;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    if (static_cast<uint64_t>(rows) * cols * 4 > r.remaining()) throw FormatError("truncated model checkpoint");
    Matrix v(rows, cols);
    r.f32s(v.values());
    names.push_back(name);
    m.params.params.emplace_back(std::move(name), std::move(v));
  }
  if (!r.at_end()) throw FormatError("model checkpoint: trailing bytes");
  m.params.idx = index_params(names, m.config.head_hidden.size() + 1);
  // The stored tensor list must match what this config builds.
  const ParamSet<float> expect = init_params(m.config, std::max<size_t>(n_items, 1),
                                             std::max<size_t>(m.vocab.num_sids, 1),
                                             std::max<size_t>(n_users, 1), 0);
  if (expect.params.size() != m.params.params.size())
    throw FormatError("model checkpoint: tensor count does not match config");
  for (size_t i = 0; i < expect.params.size(); ++i) {
    const auto& a = expect.params[i];
    const auto& b = m.params.params[i];
    if (a.name != b.name || !a.value.same_shape(b.value))
      throw FormatError("model checkpoint: tensor " + b.name + " does not match config");
  }
  return m;
}

void save_model(const Model& m, const std::string& path) { write_file_atomic(path, serialize_model(m)); }

Model load_model(const std::string& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace uxsid::model
