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

#include "uxsid/uxsid.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "json.hpp"
#include "uxsid/baselines/compare.h"
#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/hash.h"
#include "uxsid/common/json_util.h"
#include "uxsid/common/log.h"
#include "uxsid/common/parallel.h"
#include "uxsid/model/model.h"
#include "uxsid/serving/bench.h"
#include "uxsid/serving/precompute.h"
#include "uxsid/sidgen/codebook.h"
#include "uxsid/synthdata/world.h"
#include "uxsid/trainer/trainer.h"

struct uxsid_dataset {
  uxsid::synthdata::Dataset ds;
};
struct uxsid_codebook {
  uxsid::sidgen::Codebook cb;
};
struct uxsid_model {
  uxsid::model::Model m;
};
struct uxsid_store {
  uxsid::serving::EmbeddingStore store;
};

namespace {

using nlohmann::json;
namespace us = uxsid;

thread_local std::string g_last_error;

uxsid_status fail(uxsid_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs fn, mapping exceptions onto status codes and the thread's last error.
template <typename F>
uxsid_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const us::Error& e) {
    return fail(static_cast<uxsid_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(UXSID_FORMAT, std::string("json: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(UXSID_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UXSID_INTERNAL, e.what());
  } catch (...) {
    return fail(UXSID_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw us::InvalidArgument(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string text_or_empty(const char* s) { return s == nullptr ? std::string() : std::string(s); }

size_t threads_of(size_t t) { return us::resolve_threads(t); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

us::synthdata::Split parse_split(const std::string& s) {
  if (s == "train") return us::synthdata::Split::kTrain;
  if (s == "val") return us::synthdata::Split::kVal;
  if (s == "test") return us::synthdata::Split::kTest;
  throw us::InvalidArgument("split must be train, val or test, got '" + s + "'");
}

us::model::ModelConfig model_config(const char* text, int has_seed, uint64_t seed) {
  us::model::ModelConfig c =
      text == nullptr ? us::model::ModelConfig{} : us::model::model_config_from_json(text);
  if (has_seed) c.seed = seed;
  return c;
}

us::sidgen::CodebookOptions codebook_options(const std::string& text, uint64_t seed, size_t threads) {
  us::sidgen::CodebookOptions o;
  if (!text.empty()) {
    const json j = json::parse(text);
    if (!j.is_object()) throw us::InvalidArgument("codebook options must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "levels") o.levels = value.get<size_t>();
      else if (key == "codewords") o.codewords = value.get<size_t>();
      else if (key == "max_iter") o.max_iter = value.get<size_t>();
      else if (key == "tol") o.tol = value.get<double>();
      else throw us::InvalidArgument("unknown codebook option '" + key + "'");
    }
  }
  o.seed = seed;
  o.threads = threads;
  return o;
}

us::sidgen::Codebook train_codebook(const us::synthdata::Dataset& ds, const us::sidgen::CodebookOptions& o) {
  return us::sidgen::train_codebooks(us::sidgen::stack_vectors(ds.items), o);
}

struct LogTarget {
  uxsid_log_fn fn = nullptr;
  void* user = nullptr;
};

}  // namespace

extern "C" {

const char* uxsid_version(void) { return "0.1.0"; }

const char* uxsid_status_name(uxsid_status status) {
  switch (status) {
    case UXSID_OK: return "OK";
    case UXSID_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case UXSID_IO: return "IO";
    case UXSID_FORMAT: return "FORMAT";
    case UXSID_DIMENSION: return "DIMENSION";
    case UXSID_NOT_FOUND: return "NOT_FOUND";
    case UXSID_STATE: return "STATE";
    case UXSID_DIVERGED: return "DIVERGED";
    case UXSID_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

const char* uxsid_last_error(void) { return g_last_error.c_str(); }

void uxsid_string_free(char* s) { std::free(s); }

void uxsid_set_log_callback(uxsid_log_fn fn, void* user_data) {
  if (fn == nullptr) {
    us::set_log_sink(nullptr);
    return;
  }
  const LogTarget target{fn, user_data};
  us::set_log_sink([target](const std::string& m) { target.fn(m.c_str(), target.user); });
}

uxsid_status uxsid_file_checksum(const char* path, uint64_t* out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = us::fnv1a64(us::read_file_bytes(path));
    return UXSID_OK;
  });
}

uxsid_status uxsid_dataset_generate(const char* config_json, int has_seed, uint64_t seed, size_t threads,
                                    uxsid_dataset** out) {
  return guarded([&] {
    require(out, "out");
    us::synthdata::WorldConfig c =
        config_json == nullptr ? us::synthdata::WorldConfig{} : us::synthdata::world_config_from_json(config_json);
    if (has_seed) c.seed = seed;
    *out = new uxsid_dataset{us::synthdata::generate(c, threads_of(threads))};
    return UXSID_OK;
  });
}

uxsid_status uxsid_dataset_load(const char* dir, uxsid_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new uxsid_dataset{us::synthdata::load_dataset(dir)};
    return UXSID_OK;
  });
}

uxsid_status uxsid_dataset_save(const uxsid_dataset* ds, const char* dir) {
  return guarded([&] {
    require(ds, "dataset");
    require(dir, "dir");
    us::synthdata::save_dataset(ds->ds, dir);
    return UXSID_OK;
  });
}

uxsid_status uxsid_dataset_summary_json(const uxsid_dataset* ds, char** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    size_t behaviors = 0;
    for (const auto& u : ds->ds.users) behaviors += u.items.size();
    json j;
    j["items"] = ds->ds.items.size();
    j["users"] = ds->ds.users.size();
    j["behaviors"] = behaviors;
    j["train"] = ds->ds.train.size();
    j["val"] = ds->ds.val.size();
    j["test"] = ds->ds.test.size();
    j["bayes_auc"] = std::isfinite(ds->ds.bayes_auc) ? json(ds->ds.bayes_auc) : json(nullptr);
    *out = dup_string(j.dump());
    return UXSID_OK;
  });
}

void uxsid_dataset_free(uxsid_dataset* ds) { delete ds; }

uxsid_status uxsid_codebook_train(const uxsid_dataset* ds, const char* options_json, uint64_t seed,
                                  size_t threads, uxsid_codebook** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    const auto o = codebook_options(text_or_empty(options_json), seed, threads_of(threads));
    *out = new uxsid_codebook{train_codebook(ds->ds, o)};
    return UXSID_OK;
  });
}

uxsid_status uxsid_codebook_load(const char* path, uxsid_codebook** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new uxsid_codebook{us::sidgen::load_codebook(path)};
    return UXSID_OK;
  });
}

uxsid_status uxsid_codebook_save(const uxsid_codebook* cb, const char* path) {
  return guarded([&] {
    require(cb, "codebook");
    require(path, "path");
    us::sidgen::save_codebook(cb->cb, path);
    return UXSID_OK;
  });
}

uxsid_status uxsid_codebook_info_json(const uxsid_codebook* cb, char** out) {
  return guarded([&] {
    require(cb, "codebook");
    require(out, "out");
    json j;
    j["levels"] = cb->cb.num_levels();
    j["codewords"] = cb->cb.codewords();
    j["dim"] = cb->cb.dim();
    j["inertia"] = cb->cb.inertia;
    *out = dup_string(j.dump());
    return UXSID_OK;
  });
}

uxsid_status uxsid_codebook_encode_file(const uxsid_codebook* cb, const char* items_path, char** out) {
  return guarded([&] {
    require(cb, "codebook");
    require(items_path, "items_path");
    require(out, "out");
    const auto items = us::sidgen::load_content_jsonl(items_path);
    std::string text;
    for (const auto& cv : items) {
      if (cv.z.size() != cb->cb.dim())
        throw us::DimensionError("item " + std::to_string(cv.item_id) + " has dim " + std::to_string(cv.z.size()) +
                                 ", codebook expects " + std::to_string(cb->cb.dim()));
      std::vector<float> r;
      const auto sid = us::sidgen::encode(cb->cb, cv.z, &r);
      double norm = 0;
      for (float v : r) norm += double(v) * v;
      text += "{\"item_id\":" + std::to_string(cv.item_id) + ",\"sid\":[";
      for (size_t i = 0; i < sid.size(); ++i) text += (i ? "," : "") + std::to_string(sid[i]);
      text += "],\"residual_norm\":" + us::format_double(std::sqrt(norm)) + "}\n";
    }
    *out = dup_string(text);
    return UXSID_OK;
  });
}

void uxsid_codebook_free(uxsid_codebook* cb) { delete cb; }

uxsid_status uxsid_model_train(const uxsid_dataset* ds, const uxsid_codebook* cb, const char* config_json,
                               int has_seed, uint64_t seed, size_t threads, char** log_csv, uxsid_model** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(cb, "codebook");
    require(out, "out");
    us::model::ModelConfig c = model_config(config_json, has_seed, seed);
    c.sid_levels = cb->cb.num_levels();
    c.sid_codewords = cb->cb.codewords();
    const auto vocab = us::trainer::vocab_from_dataset(ds->ds, cb->cb);
    const auto data = us::trainer::bind(vocab, ds->ds);
    us::trainer::TrainOptions o;
    o.threads = threads_of(threads);
    o.on_epoch = [](const us::trainer::EpochLog& e) {
      us::log_info("epoch " + std::to_string(e.epoch) + " loss " + us::format_double(e.train_loss) + " val_auc " +
                   (e.val.auc ? us::format_double(*e.val.auc) : std::string("nan")));
    };
    auto result = us::trainer::train(us::model::create_model(c, vocab), data, o);
    if (log_csv != nullptr) *log_csv = dup_string(us::trainer::training_log_csv(result.log));
    *out = new uxsid_model{std::move(result.model)};
    if (result.diverged)
      return fail(UXSID_DIVERGED, "training diverged (non-finite loss); returned the last good parameters");
    return UXSID_OK;
  });
}

uxsid_status uxsid_model_create(const uxsid_dataset* ds, const uxsid_codebook* cb, const char* config_json,
                                int has_seed, uint64_t seed, uxsid_model** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(cb, "codebook");
    require(out, "out");
    us::model::ModelConfig c = model_config(config_json, has_seed, seed);
    c.sid_levels = cb->cb.num_levels();
    c.sid_codewords = cb->cb.codewords();
    *out = new uxsid_model{us::model::create_model(c, us::trainer::vocab_from_dataset(ds->ds, cb->cb))};
    return UXSID_OK;
  });
}

uxsid_status uxsid_model_load(const char* path, uxsid_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new uxsid_model{us::model::load_model(path)};
    return UXSID_OK;
  });
}

uxsid_status uxsid_model_save(const uxsid_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    us::model::save_model(m->m, path);
    return UXSID_OK;
  });
}

uxsid_status uxsid_model_config_json(const uxsid_model* m, char** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = dup_string(us::model::model_config_to_json(m->m.config));
    return UXSID_OK;
  });
}

uxsid_status uxsid_model_evaluate(const uxsid_model* m, const uxsid_dataset* ds, const char* split, size_t threads,
                                  char** out_json) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    require(out_json, "out_json");
    const auto s = parse_split(split == nullptr ? "test" : split);
    const auto data = us::trainer::bind(m->m.vocab, ds->ds);
    const size_t t = threads_of(threads);
    const auto r = us::trainer::evaluate(m->m, data, s, t);
    json j;
    j["model"] = us::model::variant_name(m->m.config.variant);
    j["split"] = split == nullptr ? "test" : split;
    j["impressions"] = r.impressions;
    j["skipped_empty_history"] = r.skipped_empty_history;
    j["auc"] = optional_json(r.auc);
    j["uauc"] = optional_json(r.uauc);
    j["wuauc"] = optional_json(r.wuauc);
    j["int_r_k"] = m->m.config.int_k;
    j["int_r"] = optional_json(r.int_r);
    j["int_r_pos"] = optional_json(r.int_r_pos);
    j["int_r_neg"] = optional_json(r.int_r_neg);
    if (m->m.config.variant == us::model::Variant::kUxsid)
      j["anchor_abs_cosine"] = us::trainer::anchor_diversity(m->m, data, s, t);
    *out_json = dup_string(j.dump());
    return UXSID_OK;
  });
}

void uxsid_model_free(uxsid_model* m) { delete m; }

uxsid_status uxsid_store_precompute(const uxsid_model* m, const uxsid_dataset* ds, size_t threads,
                                    uxsid_store** out) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    require(out, "out");
    const auto data = us::trainer::bind(m->m.vocab, ds->ds);
    *out = new uxsid_store{us::serving::precompute(m->m, data, threads_of(threads))};
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_load(const char* path, uxsid_store** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new uxsid_store{us::serving::load_store(path)};
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_save(const uxsid_store* s, const char* path) {
  return guarded([&] {
    require(s, "store");
    require(path, "path");
    us::serving::save_store(s->store, path);
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_info_json(const uxsid_store* s, char** out) {
  return guarded([&] {
    require(s, "store");
    require(out, "out");
    json j;
    j["records"] = s->store.size();
    j["d"] = s->store.d();
    j["collisions"] = s->store.collisions();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s->store.params_checksum()));
    j["params_checksum"] = buf;
    *out = dup_string(j.dump());
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_lookup(const uxsid_store* s, uint64_t uid, uint32_t sid, float* out, size_t capacity,
                                int* hit) {
  return guarded([&] {
    require(s, "store");
    require(out, "out");
    require(hit, "hit");
    const size_t n = 2 * s->store.d();
    if (capacity < n) throw us::DimensionError("lookup buffer holds " + std::to_string(capacity) + " floats, needs " +
                                               std::to_string(n));
    const auto rec = s->store.lookup_or_zero(uid, sid);
    std::copy(rec.values().begin(), rec.values().end(), out);
    *hit = s->store.find(uid, sid) != nullptr ? 1 : 0;
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_parity(const uxsid_store* s, const uxsid_model* m, const uxsid_dataset* ds, size_t sample,
                                uint64_t seed, size_t threads, char** out_json) {
  return guarded([&] {
    require(s, "store");
    require(m, "model");
    require(ds, "dataset");
    require(out_json, "out_json");
    const auto data = us::trainer::bind(m->m.vocab, ds->ds);
    const auto pairs = us::serving::sample_pairs(s->store, sample, seed);
    const auto r = us::serving::parity_check(s->store, m->m, data, pairs, threads_of(threads));
    json j;
    j["sampled"] = pairs.size();
    j["checked"] = r.checked;
    j["misses"] = r.misses;
    j["max_abs_deviation"] = r.max_abs_deviation;
    j["tolerance"] = 1e-6;
    j["passed"] = r.passed;
    *out_json = dup_string(j.dump());
    return UXSID_OK;
  });
}

uxsid_status uxsid_store_refresh(const uxsid_model* m, const uxsid_dataset* ds, const char* path, size_t threads,
                                 char** out_json) {
  return guarded([&] {
    require(m, "model");
    require(ds, "dataset");
    require(path, "path");
    const auto data = us::trainer::bind(m->m.vocab, ds->ds);
    const auto store = us::serving::precompute(m->m, data, threads_of(threads));
    us::serving::save_store(store, path);
    if (out_json != nullptr) {
      json j;
      j["records"] = store.size();
      j["path"] = path;
      *out_json = dup_string(j.dump());
    }
    return UXSID_OK;
  });
}

void uxsid_store_free(uxsid_store* s) { delete s; }

uint64_t uxsid_make_key(uint64_t uid, uint32_t sid) { return us::serving::make_key(uid, sid); }

uxsid_status uxsid_bench_latency(const uxsid_model* m, const size_t* lengths, size_t n_lengths,
                                 const size_t* store_sizes, size_t n_sizes, size_t calls, size_t repeats,
                                 uint64_t seed, char** out_csv) {
  return guarded([&] {
    require(m, "model");
    require(out_csv, "out_csv");
    if (n_lengths > 0) require(lengths, "lengths");
    if (n_sizes > 0) require(store_sizes, "store_sizes");
    us::serving::BenchOptions o;
    o.calls = calls;
    o.repeats = repeats;
    o.seed = seed;
    o.gsu_r = m->m.config.gsu_r;
    std::vector<us::serving::LatencyRow> rows;
    if (n_lengths > 0) rows = us::serving::bench_online_latency(m->m, std::span(lengths, n_lengths), o);
    if (n_sizes > 0) {
      const auto more = us::serving::bench_store_lookup(std::span(store_sizes, n_sizes), m->m.config.d, o);
      rows.insert(rows.end(), more.begin(), more.end());
    }
    *out_csv = dup_string(us::serving::latency_csv(rows));
    return UXSID_OK;
  });
}

uxsid_status uxsid_compare_baselines(const uxsid_dataset* ds, const uxsid_codebook* cb, const char* config_json,
                                     int has_seed, uint64_t seed, const size_t* lengths, size_t n_lengths,
                                     size_t threads, char** out_csv) {
  return guarded([&] {
    require(ds, "dataset");
    require(out_csv, "out_csv");
    if (n_lengths == 0) throw us::InvalidArgument("compare-baselines needs at least one length");
    require(lengths, "lengths");
    us::baselines::CompareOptions o;
    o.base = model_config(config_json, has_seed, seed);
    o.lengths.assign(lengths, lengths + n_lengths);
    o.threads = threads_of(threads);
    o.on_row = [](const us::baselines::CompareRow& r) {
      us::log_info(std::string("compare: ") + us::model::variant_name(r.variant) + " @" + std::to_string(r.length) +
                   " test_auc " + (r.auc ? us::format_double(*r.auc) : std::string("nan")));
    };
    us::sidgen::Codebook trained;
    if (cb == nullptr) {
      us::sidgen::CodebookOptions co;
      co.levels = o.base.sid_levels;
      co.codewords = o.base.sid_codewords;
      co.seed = o.base.seed;
      co.threads = o.threads;
      trained = train_codebook(ds->ds, co);
    }
    const auto rows = us::baselines::compare_baselines(ds->ds, cb ? cb->cb : trained, o);
    *out_csv = dup_string(us::baselines::compare_csv(rows));
    return UXSID_OK;
  });
}

}  // extern "C"
