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

#ifndef UXSID_TESTS_PIPELINE_UTIL_H_
#define UXSID_TESTS_PIPELINE_UTIL_H_

#include "uxsid/model/model.h"
#include "uxsid/sidgen/codebook.h"
#include "uxsid/synthdata/world.h"
#include "uxsid/trainer/trainer.h"

namespace uxsid::testing {

// A world small enough to train in well under a second.
struct SmallSetup {
  synthdata::Dataset ds;
  model::Vocab vocab;
  trainer::BoundData data;
};

inline SmallSetup small_setup() {
  synthdata::WorldConfig w;
  w.n_clusters = 8;
  w.items_per_cluster = 20;
  w.content_dim = 8;
  w.n_users = 120;
  w.seq_len = 120;
  w.distal_begin = 0;
  w.distal_end = 20;
  w.seed = 21;
  SmallSetup s;
  s.ds = synthdata::generate_world(w).dataset;
  sidgen::CodebookOptions co;
  co.levels = 2;
  co.codewords = 8;
  co.seed = 2;
  const auto cb = sidgen::train_codebooks(sidgen::stack_vectors(s.ds.items), co);
  s.vocab = trainer::vocab_from_dataset(s.ds, cb);
  s.data = trainer::bind(s.vocab, s.ds);
  return s;
}

inline model::ModelConfig small_model(model::Variant v = model::Variant::kUxsid) {
  model::ModelConfig c;
  c.variant = v;
  c.d = 8;
  c.num_anchors = 4;
  c.d_ff = 16;
  c.d_g = 8;
  c.head_hidden = {16, 8};
  c.batch_size = 64;
  c.learning_rate = 3e-3;
  c.max_epochs = 5;
  c.patience = 10;
  c.din_window = 20;
  c.gsu_r = 20;
  c.int_k = 10;
  c.sid_codewords = 8;
  c.sid_levels = 2;
  return c;
}

}  // namespace uxsid::testing

#endif  // UXSID_TESTS_PIPELINE_UTIL_H_
