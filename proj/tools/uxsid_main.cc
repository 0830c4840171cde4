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

// Command-line front end. Links only the C interface in uxsid.h.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uxsid/uxsid.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingInput = 3;

struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void raise_status(uxsid_status s) {
  throw CliError{kExitFailure, uxsid_status_name(s), uxsid_last_error()};
}

void check(uxsid_status s) {
  if (s != UXSID_OK) raise_status(s);
}

// Owns a string allocated by the library.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { uxsid_string_free(p); }
  std::string str() const { return p == nullptr ? std::string() : std::string(p); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Dataset = Handle<uxsid_dataset, uxsid_dataset_free>;
using Codebook = Handle<uxsid_codebook, uxsid_codebook_free>;
using Model = Handle<uxsid_model, uxsid_model_free>;
using Store = Handle<uxsid_store, uxsid_store_free>;

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitMissingInput, "NOT_FOUND", "input not found: " + path};
}

std::string read_text(const std::string& path) {
  require_input(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitMissingInput, "IO", "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary file and a rename so readers never see a
// partial file.
void write_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError{kExitFailure, "IO", "cannot write " + tmp};
    out << text;
    if (!out.flush()) throw CliError{kExitFailure, "IO", "write failed for " + tmp};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw CliError{kExitFailure, "IO", "rename to " + path + " failed: " + ec.message()};
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_checksum(const std::string& path) {
  uint64_t h = 0;
  check(uxsid_file_checksum(path.c_str(), &h));
  return hex64(h);
}

// Checksums of a file, or of every regular file in a directory except the
// manifest, keyed by path.
void add_checksums(json& into, const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) into[f] = file_checksum(f);
  } else if (fs::exists(path)) {
    into[path] = file_checksum(path);
  }
}

std::vector<size_t> parse_sizes(const std::string& text, const char* flag) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      throw CliError{kExitUsage, "INVALID_ARGUMENT", std::string(flag) + ": expected positive integers, got '" + text + "'"};
    }
  }
  if (out.empty()) throw CliError{kExitUsage, "INVALID_ARGUMENT", std::string(flag) + " is empty"};
  return out;
}

struct Context {
  std::string subcommand;
  uint64_t seed = 1;
  bool seed_set = false;
  size_t threads = 0;
  json config = json::object();  // flag and config-file echo
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

// <output>.manifest.json, or manifest.json inside an output directory.
void write_manifest(const Context& ctx, const std::string& output, double seconds) {
  json m;
  m["subcommand"] = ctx.subcommand;
  m["config"] = ctx.config;
  m["seed"] = ctx.seed;
  m["build"] = std::string("uxsid ") + uxsid_version();
  json inputs = json::object();
  for (const auto& in : ctx.inputs) add_checksums(inputs, in);
  m["inputs"] = inputs;
  json outputs = json::object();
  for (const auto& out : ctx.outputs) add_checksums(outputs, out);
  m["outputs"] = outputs;
  m["timings"] = {{"wall_seconds", seconds}};
  const std::string path =
      fs::is_directory(output) ? (fs::path(output) / "manifest.json").string() : output + ".manifest.json";
  write_atomic(path, m.dump(2) + "\n");
}

void print_json(const std::string& text) { std::cout << text << "\n"; }

const char* seed_note(const Context& ctx) { return ctx.seed_set ? "flag" : "default"; }

void log_to_stderr(const char* message, void*) { std::fprintf(stderr, "[uxsid] %s\n", message); }

// Loads a JSON config file (if given) and echoes it into the manifest.
std::string load_config(Context& ctx, const std::string& path, const char* key) {
  if (path.empty()) return std::string();
  std::string text = read_text(path);
  try {
    ctx.config[key] = json::parse(text);
  } catch (const json::exception& e) {
    throw CliError{kExitFailure, "FORMAT", path + ": " + e.what()};
  }
  ctx.inputs.push_back(path);
  return text;
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UxSID: semantic-ID interest compression for ultra-long behavior sequences"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  Context ctx;
  std::function<void()> run;
  std::string data_dir, out, config_path, codebook_path, model_path, store_path, items_path, options_path, split = "test",
                                                                                                       lengths = "1000,10000",
                                                                                                       sizes, log_path;
  size_t sample = 1000, calls = 10000, repeats = 5;
  size_t levels = 0, codewords = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", ctx.seed, "Seed for every random choice")->each([&](const std::string&) {
      ctx.seed_set = true;
    });
    sub->add_option("--threads", ctx.threads, "Worker cap (0: UXSID_THREADS, else hardware)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic world");
  gen->add_option("--config", config_path, "World config JSON");
  gen->add_option("--out", out, "Output directory")->required();
  add_common(gen);
  gen->callback([&] {
    run = [&] {
      const std::string cfg = load_config(ctx, config_path, "world");
      Dataset ds;
      check(uxsid_dataset_generate(c_or_null(cfg), ctx.seed_set, ctx.seed, ctx.threads, &ds.p));
      check(uxsid_dataset_save(ds.p, out.c_str()));
      ctx.outputs.push_back(out);
      OwnedString summary;
      check(uxsid_dataset_summary_json(ds.p, &summary.p));
      print_json(summary.str());
    };
  });

  auto* tcb = app.add_subcommand("train-codebook", "Fit residual k-means codebooks on item content");
  tcb->add_option("--data", data_dir, "Dataset directory")->required();
  tcb->add_option("--out", out, "Codebook file")->required();
  tcb->add_option("--options", options_path, "Codebook options JSON");
  tcb->add_option("--levels", levels, "Override the number of levels");
  tcb->add_option("--codewords", codewords, "Override codewords per level");
  add_common(tcb);
  tcb->callback([&] {
    run = [&] {
      require_input(data_dir);
      ctx.inputs.push_back(data_dir);
      json opts = json::object();
      if (!options_path.empty()) opts = json::parse(load_config(ctx, options_path, "codebook"));
      if (levels) opts["levels"] = levels;
      if (codewords) opts["codewords"] = codewords;
      ctx.config["codebook_effective"] = opts;
      Dataset ds;
      check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
      Codebook cb;
      check(uxsid_codebook_train(ds.p, opts.dump().c_str(), ctx.seed, ctx.threads, &cb.p));
      check(uxsid_codebook_save(cb.p, out.c_str()));
      ctx.outputs.push_back(out);
      OwnedString info;
      check(uxsid_codebook_info_json(cb.p, &info.p));
      print_json(info.str());
    };
  });

  auto* enc = app.add_subcommand("encode", "Assign SID tuples to items");
  enc->add_option("--codebook", codebook_path, "Codebook file")->required();
  enc->add_option("--items", items_path, "items.jsonl with content vectors")->required();
  enc->add_option("--out", out, "Output JSONL")->required();
  add_common(enc);
  enc->callback([&] {
    run = [&] {
      require_input(codebook_path);
      require_input(items_path);
      ctx.inputs = {codebook_path, items_path};
      Codebook cb;
      check(uxsid_codebook_load(codebook_path.c_str(), &cb.p));
      OwnedString text;
      check(uxsid_codebook_encode_file(cb.p, items_path.c_str(), &text.p));
      write_atomic(out, text.str());
      ctx.outputs.push_back(out);
      const std::string s = text.str();
      print_json(json{{"items", std::count(s.begin(), s.end(), '\n')}, {"out", out}}.dump());
    };
  });

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--config", config_path, "Model config JSON");
  tr->add_option("--codebook", codebook_path, "Codebook file (trained from the config when absent)");
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_option("--log", log_path, "Training log CSV (default <out>.log.csv)");
  add_common(tr);
  tr->callback([&] {
    run = [&] {
      require_input(data_dir);
      ctx.inputs.push_back(data_dir);
      const std::string cfg = load_config(ctx, config_path, "model");
      Dataset ds;
      check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
      Codebook cb;
      if (!codebook_path.empty()) {
        require_input(codebook_path);
        ctx.inputs.push_back(codebook_path);
        check(uxsid_codebook_load(codebook_path.c_str(), &cb.p));
      } else {
        // Codebook shape and seed follow the model config.
        json mc = cfg.empty() ? json::object() : json::parse(cfg);
        const json opts{{"levels", mc.value("sid_levels", 4)}, {"codewords", mc.value("sid_codewords", 256)}};
        check(uxsid_codebook_train(ds.p, opts.dump().c_str(), ctx.seed_set ? ctx.seed : mc.value("seed", 1ull),
                                   ctx.threads, &cb.p));
      }
      Model m;
      OwnedString log_csv;
      const uxsid_status s =
          uxsid_model_train(ds.p, cb.p, c_or_null(cfg), ctx.seed_set, ctx.seed, ctx.threads, &log_csv.p, &m.p);
      if (s != UXSID_OK && s != UXSID_DIVERGED) raise_status(s);
      const std::string error = s == UXSID_DIVERGED ? uxsid_last_error() : "";
      check(uxsid_model_save(m.p, out.c_str()));
      if (log_path.empty()) log_path = out + ".log.csv";
      write_atomic(log_path, log_csv.str());
      ctx.outputs = {out, log_path};
      if (s == UXSID_DIVERGED) throw CliError{kExitFailure, "DIVERGED", error};
      OwnedString config;
      check(uxsid_model_config_json(m.p, &config.p));
      print_json(json{{"checkpoint", out}, {"log", log_path}, {"config", json::parse(config.str())}}.dump());
    };
  });

  auto* ev = app.add_subcommand("evaluate", "Score a split and print AUC/UAUC/WUAUC/Int.R as JSON");
  ev->add_option("--data", data_dir, "Dataset directory")->required();
  ev->add_option("--model", model_path, "Checkpoint")->required();
  ev->add_option("--split", split, "train, val or test");
  ev->add_option("--out", out, "Also write the JSON here");
  add_common(ev);
  ev->callback([&] {
    run = [&] {
      require_input(data_dir);
      require_input(model_path);
      ctx.inputs = {data_dir, model_path};
      ctx.config["split"] = split;
      Dataset ds;
      check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
      Model m;
      check(uxsid_model_load(model_path.c_str(), &m.p));
      OwnedString result;
      check(uxsid_model_evaluate(m.p, ds.p, split.c_str(), ctx.threads, &result.p));
      if (!out.empty()) {
        write_atomic(out, result.str() + "\n");
        ctx.outputs.push_back(out);
      }
      print_json(result.str());
    };
  });

  auto add_store_build = [&](CLI::App* sub, bool refresh) {
    sub->add_option("--model", model_path, "Checkpoint")->required();
    sub->add_option("--data", data_dir, "Dataset directory")->required();
    sub->add_option(refresh ? "--store" : "--out", out, "Store file")->required();
    add_common(sub);
    sub->callback([&, refresh] {
      run = [&, refresh] {
        require_input(data_dir);
        require_input(model_path);
        ctx.inputs = {data_dir, model_path};
        Dataset ds;
        check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
        Model m;
        check(uxsid_model_load(model_path.c_str(), &m.p));
        OwnedString info;
        if (refresh) {
          check(uxsid_store_refresh(m.p, ds.p, out.c_str(), ctx.threads, &info.p));
        } else {
          Store s;
          check(uxsid_store_precompute(m.p, ds.p, ctx.threads, &s.p));
          check(uxsid_store_save(s.p, out.c_str()));
          check(uxsid_store_info_json(s.p, &info.p));
        }
        ctx.outputs.push_back(out);
        print_json(info.str());
      };
    });
  };
  add_store_build(app.add_subcommand("precompute", "Build the embedding store"), false);
  add_store_build(app.add_subcommand("refresh", "Rebuild a store and atomically replace its file"), true);

  auto* par = app.add_subcommand("parity", "Compare cached records with fresh recomputation");
  par->add_option("--store", store_path, "Store file")->required();
  par->add_option("--model", model_path, "Checkpoint")->required();
  par->add_option("--data", data_dir, "Dataset directory")->required();
  par->add_option("--sample", sample, "Pairs to check");
  par->add_option("--out", out, "Also write the JSON here");
  add_common(par);
  par->callback([&] {
    run = [&] {
      for (const auto& p : {store_path, model_path, data_dir}) require_input(p);
      ctx.inputs = {store_path, model_path, data_dir};
      ctx.config["sample"] = sample;
      Store s;
      check(uxsid_store_load(store_path.c_str(), &s.p));
      Model m;
      check(uxsid_model_load(model_path.c_str(), &m.p));
      Dataset ds;
      check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
      OwnedString result;
      check(uxsid_store_parity(s.p, m.p, ds.p, sample, ctx.seed, ctx.threads, &result.p));
      if (!out.empty()) {
        write_atomic(out, result.str() + "\n");
        ctx.outputs.push_back(out);
      }
      print_json(result.str());
      if (!json::parse(result.str()).at("passed").get<bool>())
        throw CliError{kExitFailure, "STATE", "parity check failed"};
    };
  });

  auto* bench = app.add_subcommand("bench-latency", "Online latency versus sequence length (CSV)");
  bench->add_option("--model", model_path, "Checkpoint (untrained default model when absent)");
  bench->add_option("--lengths", lengths, "Comma-separated sequence lengths");
  bench->add_option("--store-sizes", sizes, "Comma-separated store sizes for lookup timing");
  bench->add_option("--calls", calls, "Timed calls per length and repeat");
  bench->add_option("--repeats", repeats, "Repeats");
  bench->add_option("--out", out, "CSV path (stdout when absent)");
  add_common(bench);
  bench->callback([&] {
    run = [&] {
      const auto ls = parse_sizes(lengths, "--lengths");
      const auto ss = sizes.empty() ? std::vector<size_t>{} : parse_sizes(sizes, "--store-sizes");
      ctx.config["lengths"] = ls;
      ctx.config["store_sizes"] = ss;
      ctx.config["calls"] = calls;
      ctx.config["repeats"] = repeats;
      Model m;
      if (!model_path.empty()) {
        require_input(model_path);
        ctx.inputs.push_back(model_path);
        check(uxsid_model_load(model_path.c_str(), &m.p));
      } else {
        Dataset ds;
        check(uxsid_dataset_generate(nullptr, ctx.seed_set, ctx.seed, ctx.threads, &ds.p));
        Codebook cb;
        check(uxsid_codebook_train(ds.p, "{\"codewords\":32}", ctx.seed, ctx.threads, &cb.p));
        check(uxsid_model_create(ds.p, cb.p, nullptr, ctx.seed_set, ctx.seed, &m.p));
      }
      OwnedString csv;
      check(uxsid_bench_latency(m.p, ls.data(), ls.size(), ss.data(), ss.size(), calls, repeats, ctx.seed, &csv.p));
      if (out.empty()) {
        std::cout << csv.str();
      } else {
        write_atomic(out, csv.str());
        ctx.outputs.push_back(out);
      }
    };
  });

  auto* cmp = app.add_subcommand("compare-baselines", "AUC versus sequence length for UxSID and baselines (CSV)");
  cmp->add_option("--data", data_dir, "Dataset directory")->required();
  cmp->add_option("--lengths", lengths, "Comma-separated sequence lengths")->default_str("100,1000,2000,10000");
  cmp->add_option("--config", config_path, "Base model config JSON");
  cmp->add_option("--codebook", codebook_path, "Codebook file (trained from the config when absent)");
  cmp->add_option("--out", out, "CSV path")->required();
  add_common(cmp);
  cmp->callback([&] {
    run = [&] {
      if (cmp->count("--lengths") == 0) lengths = "100,1000,2000,10000";
      const auto ls = parse_sizes(lengths, "--lengths");
      ctx.config["lengths"] = ls;
      require_input(data_dir);
      ctx.inputs.push_back(data_dir);
      const std::string cfg = load_config(ctx, config_path, "model");
      Dataset ds;
      check(uxsid_dataset_load(data_dir.c_str(), &ds.p));
      Codebook cb;
      if (!codebook_path.empty()) {
        require_input(codebook_path);
        ctx.inputs.push_back(codebook_path);
        check(uxsid_codebook_load(codebook_path.c_str(), &cb.p));
      }
      OwnedString csv;
      check(uxsid_compare_baselines(ds.p, cb.p, c_or_null(cfg), ctx.seed_set, ctx.seed, ls.data(), ls.size(),
                                    ctx.threads, &csv.p));
      write_atomic(out, csv.str());
      ctx.outputs.push_back(out);
      std::cout << csv.str();
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\nerror: code=USAGE message=" << e.what() << "\n";
    return kExitUsage;
  }

  for (CLI::App* sub : app.get_subcommands()) ctx.subcommand = sub->get_name();
  uxsid_set_log_callback(&log_to_stderr, nullptr);
  try {
    ctx.config["threads"] = ctx.threads;
    ctx.config["seed_source"] = seed_note(ctx);
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!ctx.outputs.empty()) write_manifest(ctx, ctx.outputs.front(), seconds);
    return 0;
  } catch (const CliError& e) {
    std::cerr << "error: code=" << e.code << " message=" << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: code=INTERNAL message=" << e.what() << "\n";
    return kExitFailure;
  }
}
