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

#include "uxsid/trainer/trainer.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <unordered_map>

#include "uxsid/common/error.h"
#include "uxsid/common/log.h"
#include "uxsid/common/parallel.h"
#include "uxsid/common/rng.h"
#include "uxsid/trainer/adam.h"
#include "uxsid/trainer/metrics.h"

namespace uxsid::trainer {

namespace {

constexpr uint64_t kShuffleStream = 0x7a11;

double mean_or_nan(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> optional_mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return mean_or_nan(v);
}

model::GroupInput make_input(const BoundData& data, std::span<const BoundExample> examples,
                             const ExampleGroup& g, bool with_labels) {
  model::GroupInput in;
  in.user = g.user;
  const auto& hist = data.histories.at(static_cast<size_t>(g.user));
  if (g.history_len > hist.size()) throw InvalidArgument("example history exceeds the user's sequence");
  in.history = std::span<const int32_t>(hist.data(), g.history_len);
  for (size_t r : g.rows) {
    in.targets.push_back(examples[r].target);
    if (with_labels) in.labels.push_back(examples[r].label);
  }
  return in;
}

}  // namespace

const std::vector<BoundExample>& BoundData::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
  }
  throw InvalidArgument("unknown split");
}

model::Vocab vocab_from_dataset(const Dataset& ds, const sidgen::Codebook& codebook) {
  model::Vocab v;
  v.num_sids = codebook.codewords();
  for (const auto& cv : ds.items) {
    v.item_ids.push_back(cv.item_id);
    v.item_sid.push_back(static_cast<int32_t>(sidgen::first_layer_sid(sidgen::encode(codebook, cv.z))));
    v.item_category.push_back(cv.category);
  }
  for (const auto& u : ds.users) v.user_ids.push_back(u.user_id);
  return v;
}

BoundData bind(const model::Vocab& vocab, const Dataset& ds) {
  std::unordered_map<int64_t, int32_t> items, users;
  for (size_t i = 0; i < vocab.item_ids.size(); ++i) items.emplace(vocab.item_ids[i], static_cast<int32_t>(i));
  for (size_t i = 0; i < vocab.user_ids.size(); ++i) users.emplace(vocab.user_ids[i], static_cast<int32_t>(i));
  std::vector<int32_t> item_map(ds.items.size());
  for (size_t i = 0; i < ds.items.size(); ++i) {
    auto it = items.find(ds.items[i].item_id);
    if (it == items.end()) throw NotFound("item " + std::to_string(ds.items[i].item_id) + " unknown to the model");
    item_map[i] = it->second;
  }
  BoundData out;
  out.histories.resize(vocab.user_ids.size());
  for (const auto& u : ds.users) {
    auto it = users.find(u.user_id);
    if (it == users.end()) throw NotFound("user " + std::to_string(u.user_id) + " unknown to the model");
    out.user_index.push_back(it->second);
    auto& h = out.histories[static_cast<size_t>(it->second)];
    h.clear();
    for (int32_t i : u.items) h.push_back(item_map[static_cast<size_t>(i)]);
  }
  auto convert = [&](const std::vector<synthdata::Example>& in, std::vector<BoundExample>& dst) {
    for (const auto& e : in)
      dst.push_back({out.user_index.at(static_cast<size_t>(e.user)), e.history_len,
                     item_map.at(static_cast<size_t>(e.target)), e.label});
  };
  convert(ds.train, out.train);
  convert(ds.val, out.val);
  convert(ds.test, out.test);
  return out;
}

std::vector<ExampleGroup> group_examples(std::span<const BoundExample> examples,
                                         std::span<const size_t> order) {
  std::vector<ExampleGroup> groups;
  std::map<std::pair<int32_t, uint32_t>, size_t> slot;
  for (size_t r : order) {
    const auto& e = examples[r];
    auto [it, inserted] = slot.try_emplace({e.user, e.history_len}, groups.size());
    if (inserted) groups.push_back({e.user, e.history_len, {}});
    groups[it->second].rows.push_back(r);
  }
  return groups;
}

EvalResult evaluate(const Model& m, const BoundData& data, Split split, size_t threads) {
  const auto& examples = data.split(split);
  EvalResult out;
  out.scores.assign(examples.size(), std::numeric_limits<float>::quiet_NaN());
  std::vector<size_t> order;
  for (size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].history_len == 0) {
      ++out.skipped_empty_history;
      continue;
    }
    order.push_back(i);
  }
  const auto groups = group_examples(examples, order);
  const bool uxsid = m.config.variant == model::Variant::kUxsid;
  std::vector<double> int_r(examples.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(groups.size(), threads, [&](size_t gi) {
    const ExampleGroup& g = groups[gi];
    const model::GroupInput in = make_input(data, examples, g, false);
    model::Tape<float> tape;
    model::Net<float> net(tape, m.params);
    const model::GroupForward f = model::forward_group(net, m.vocab, in);
    const auto probs = model::probabilities(tape.value(f.logits));
    std::vector<int32_t> seq_sids;
    if (uxsid) {
      for (size_t p = f.seq_begin; p < in.history.size(); ++p)
        seq_sids.push_back(m.vocab.item_sid[static_cast<size_t>(in.history[p])]);
    }
    for (size_t r = 0; r < g.rows.size(); ++r) {
      out.scores[g.rows[r]] = probs[r];
      if (uxsid) {
        const int32_t target_sid = m.vocab.item_sid[static_cast<size_t>(in.targets[r])];
        int_r[g.rows[r]] = interest_recall_at_k(tape.value(f.global_scores).row(r), seq_sids, target_sid,
                                                m.config.int_k);
      }
    }
  });

  std::vector<float> scores, labels;
  std::vector<int64_t> users;
  std::vector<double> all, pos, neg;
  for (size_t i : order) {
    scores.push_back(out.scores[i]);
    labels.push_back(examples[i].label);
    users.push_back(m.vocab.user_ids[static_cast<size_t>(examples[i].user)]);
    if (uxsid) {
      all.push_back(int_r[i]);
      (examples[i].label > 0.5f ? pos : neg).push_back(int_r[i]);
    }
  }
  out.impressions = order.size();
  out.auc = eval_auc(scores, labels);
  const GroupedAuc grouped = eval_grouped_auc(scores, labels, users);
  out.uauc = grouped.uauc;
  out.wuauc = grouped.wuauc;
  out.int_r = optional_mean(all);
  out.int_r_pos = optional_mean(pos);
  out.int_r_neg = optional_mean(neg);
  return out;
}

double anchor_diversity(const Model& m, const BoundData& data, Split split, size_t threads) {
  if (m.config.variant != model::Variant::kUxsid) throw StateError("anchor_diversity needs a uxsid model");
  std::vector<std::pair<int32_t, uint32_t>> users;
  std::map<int32_t, bool> seen;
  for (const auto& e : data.split(split))
    if (e.history_len > 0 && seen.try_emplace(e.user, true).second) users.emplace_back(e.user, e.history_len);
  std::vector<double> per_user(users.size());
  parallel_for(users.size(), threads, [&](size_t i) {
    const auto& hist = data.histories[static_cast<size_t>(users[i].first)];
    const auto p = model::uxsid_embed(m, std::span<const int32_t>(hist.data(), users[i].second), 0).anchors;
    double sum = 0;
    size_t pairs = 0;
    for (size_t a = 0; a < p.rows(); ++a) {
      for (size_t b = a + 1; b < p.rows(); ++b) {
        double dot = 0, na = 0, nb = 0;
        for (size_t k = 0; k < p.cols(); ++k) {
          dot += double(p(a, k)) * p(b, k);
          na += double(p(a, k)) * p(a, k);
          nb += double(p(b, k)) * p(b, k);
        }
        sum += std::abs(dot) / std::max(std::sqrt(na * nb), 1e-30);
        ++pairs;
      }
    }
    per_user[i] = pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
  });
  return mean_or_nan(per_user);
}

TrainResult train(Model initial, const BoundData& data, const TrainOptions& options) {
  TrainResult result;
  result.model = std::move(initial);
  Model& m = result.model;
  const model::ModelConfig& c = m.config;
  std::vector<size_t> usable;
  for (size_t i = 0; i < data.train.size(); ++i)
    if (data.train[i].history_len > 0) usable.push_back(i);
  if (usable.empty()) throw InvalidArgument("train: no training examples with a nonempty history");
  if (usable.size() < data.train.size())
    log_info("train: skipped " + std::to_string(data.train.size() - usable.size()) +
             " examples with an empty history");

  const auto base_groups = group_examples(data.train, usable);
  Rng rng(derive_seed(c.seed, kShuffleStream));
  Adam adam(m.params.params, AdamOptions{c.learning_rate});
  auto best = m.params;
  double best_auc = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  size_t stale = 0;

  for (size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const auto last_good = m.params;
    std::vector<size_t> group_order(base_groups.size());
    for (size_t i = 0; i < group_order.size(); ++i) group_order[i] = i;
    rng.shuffle(std::span<size_t>(group_order));
    std::vector<size_t> rows;
    rows.reserve(usable.size());
    for (size_t gi : group_order) rows.insert(rows.end(), base_groups[gi].rows.begin(), base_groups[gi].rows.end());

    double loss_sum = 0, ortho_sum = 0;
    size_t seen = 0;
    for (size_t begin = 0; begin < rows.size() && !result.diverged; begin += c.batch_size) {
      const size_t end = std::min(rows.size(), begin + c.batch_size);
      const auto groups = group_examples(data.train, std::span<const size_t>(rows).subspan(begin, end - begin));
      std::vector<model::GroupInput> inputs;
      inputs.reserve(groups.size());
      for (const auto& g : groups) inputs.push_back(make_input(data, data.train, g, true));
      const auto parts = model::joint_loss(m.params, m.vocab, inputs, true, options.threads);
      if (!std::isfinite(parts.total)) {
        log_info("train: non-finite loss in epoch " + std::to_string(epoch) + "; restoring last good parameters");
        result.diverged = true;
        break;
      }
      adam.step(m.params.params);
      loss_sum += parts.total * static_cast<double>(parts.examples);
      ortho_sum += parts.ortho_weighted_sum;
      seen += parts.examples;
    }
    if (result.diverged) {
      m.params = have_best ? best : last_good;
      break;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(seen);
    log.ortho_term = ortho_sum / static_cast<double>(seen);
    log.val = evaluate(m, data, Split::kVal, options.threads);
    log.val.scores.clear();
    result.log.push_back(log);
    if (options.on_epoch) options.on_epoch(log);

    if (log.val.auc && *log.val.auc > best_auc) {
      best_auc = *log.val.auc;
      best = m.params;
      have_best = true;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= c.patience) {
      break;
    }
  }
  if (have_best && !result.diverged) m.params = best;
  result.skipped_steps = adam.skipped();
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  auto fmt = [](std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  std::string out = "epoch,train_loss,ortho_term,val_auc,val_uauc,val_wuauc,int_r_at_50\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.ortho_term) + "," + fmt(e.val.auc) +
           "," + fmt(e.val.uauc) + "," + fmt(e.val.wuauc) + "," + fmt(e.val.int_r) + "\n";
  }
  return out;
}

}  // namespace uxsid::trainer
