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

#ifndef UXSID_TRAINER_TRAINER_H_
#define UXSID_TRAINER_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uxsid/model/model.h"
#include "uxsid/sidgen/codebook.h"
#include "uxsid/synthdata/dataset.h"

namespace uxsid::trainer {

using model::Model;
using synthdata::Dataset;
using synthdata::Split;

// A dataset re-expressed in a model's dense item and user indices.
struct BoundExample {
  int32_t user = 0;
  uint32_t history_len = 0;
  int32_t target = 0;
  float label = 0.0f;
};

struct BoundData {
  std::vector<std::vector<int32_t>> histories;  // per model user index
  std::vector<int32_t> user_index;              // dataset user -> model user
  std::vector<BoundExample> train, val, test;

  const std::vector<BoundExample>& split(Split s) const;
};

// Items in dataset order with first-layer SIDs from `codebook`; users in
// dataset order.
model::Vocab vocab_from_dataset(const Dataset& ds, const sidgen::Codebook& codebook);

// Maps dataset ids onto the model vocabulary; unknown ids are NotFound.
BoundData bind(const model::Vocab& vocab, const Dataset& ds);

// Impressions sharing (user, history_len), in first-appearance order.
struct ExampleGroup {
  int32_t user = 0;
  uint32_t history_len = 0;
  std::vector<size_t> rows;
};
std::vector<ExampleGroup> group_examples(std::span<const BoundExample> examples,
                                         std::span<const size_t> order);

struct EvalResult {
  std::optional<double> auc, uauc, wuauc;
  // Mean Int.R@k over impressions (UxSID only), overall and by label.
  std::optional<double> int_r, int_r_pos, int_r_neg;
  size_t impressions = 0;
  size_t skipped_empty_history = 0;
  std::vector<float> scores;  // aligned with the split's examples (NaN if skipped)
};

EvalResult evaluate(const Model& m, const BoundData& data, Split split, size_t threads = 1);

// Mean over users of the mean pairwise |cosine| between rows of P.
double anchor_diversity(const Model& m, const BoundData& data, Split split, size_t threads = 1);

struct EpochLog {
  size_t epoch = 0;
  double train_loss = 0.0;
  double ortho_term = 0.0;
  EvalResult val;
};

struct TrainOptions {
  size_t threads = 1;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::vector<EpochLog> log;
  size_t best_epoch = 0;
  uint64_t skipped_steps = 0;
  bool diverged = false;
};

// Seeded mini-batch Adam on the joint loss with early stopping on val AUC.
// A non-finite loss stops training and returns the last good parameters.
TrainResult train(Model initial, const BoundData& data, const TrainOptions& options = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace uxsid::trainer

#endif  // UXSID_TRAINER_TRAINER_H_
