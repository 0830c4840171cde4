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

#include "uxsid/synthdata/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"
#include "uxsid/common/binary_io.h"
#include "uxsid/common/error.h"
#include "uxsid/common/json_util.h"

namespace uxsid::synthdata {

namespace fs = std::filesystem;

std::unordered_map<int64_t, int32_t> Dataset::item_index() const {
  std::unordered_map<int64_t, int32_t> index;
  index.reserve(items.size());
  for (size_t i = 0; i < items.size(); ++i) index.emplace(items[i].item_id, static_cast<int32_t>(i));
  return index;
}

const std::vector<Example>& split_examples(const Dataset& ds, Split split) {
  switch (split) {
    case Split::kTrain: return ds.train;
    case Split::kVal: return ds.val;
    case Split::kTest: return ds.test;
  }
  throw InvalidArgument("unknown split");
}

namespace {

void append_line(std::string& out, int64_t user, int64_t item, int64_t ts, float label,
                 const char* split) {
  out += "{\"user_id\":";
  out += std::to_string(user);
  out += ",\"item_id\":";
  out += std::to_string(item);
  out += ",\"ts\":";
  out += std::to_string(ts);
  out += ",\"label\":";
  out += label != 0.0f ? '1' : '0';
  out += ",\"split\":\"";
  out += split;
  out += "\"}\n";
}

struct RawInteraction {
  int64_t item_id;
  int64_t ts;
  float label;
  int split;  // -1 none, 0 history, 1 train, 2 val, 3 test
};

int parse_split(const std::string& s, const std::string& where) {
  if (s == "history") return 0;
  if (s == "train") return 1;
  if (s == "val") return 2;
  if (s == "test") return 3;
  throw FormatError(where + ": unknown split \"" + s + "\"");
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  write_file_atomic((fs::path(dir) / "items.jsonl").string(), sidgen::content_to_jsonl(ds.items));

  // Impressions grouped by user so each user's lines are contiguous.
  std::vector<std::vector<std::pair<const Example*, const char*>>> by_user(ds.users.size());
  auto collect = [&](const std::vector<Example>& split, const char* name) {
    for (const Example& e : split) by_user.at(static_cast<size_t>(e.user)).emplace_back(&e, name);
  };
  collect(ds.train, "train");
  collect(ds.val, "val");
  collect(ds.test, "test");

  std::string out;
  for (size_t u = 0; u < ds.users.size(); ++u) {
    const UserRecord& rec = ds.users[u];
    for (size_t i = 0; i < rec.items.size(); ++i)
      append_line(out, rec.user_id, ds.items[static_cast<size_t>(rec.items[i])].item_id, rec.ts[i],
                  1.0f, "history");
    for (const auto& [e, name] : by_user[u])
      append_line(out, rec.user_id, ds.items[static_cast<size_t>(e->target)].item_id, e->ts,
                  e->label, name);
  }
  write_file_atomic((fs::path(dir) / "interactions.jsonl").string(), out);
  write_file_atomic((fs::path(dir) / "meta.json").string(), ds.meta_json + "\n");
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  const fs::path root(dir);
  ds.items = sidgen::load_content_jsonl((root / "items.jsonl").string());
  const auto index = ds.item_index();
  if (index.size() != ds.items.size()) throw FormatError("items.jsonl: duplicate item_id");

  const std::string path = (root / "interactions.jsonl").string();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<int64_t> user_order;
  std::unordered_map<int64_t, std::vector<RawInteraction>> per_user;
  std::string line;
  size_t line_no = 0;
  int mode = -2;  // -2 unknown, -1 leave-last-out, 1 explicit splits
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const nlohmann::json j = parse_json_line(line, where);
    RawInteraction r;
    const int64_t user = json_field<int64_t>(j, "user_id", where);
    r.item_id = json_field<int64_t>(j, "item_id", where);
    r.ts = json_field<int64_t>(j, "ts", where);
    const double label = json_field<double>(j, "label", where);
    if (label != 0.0 && label != 1.0) throw FormatError(where + ": label must be 0 or 1");
    r.label = static_cast<float>(label);
    r.split = j.contains("split") ? parse_split(json_field<std::string>(j, "split", where), where) : -1;
    const int line_mode = r.split < 0 ? -1 : 1;
    if (mode == -2) mode = line_mode;
    if (mode != line_mode) throw FormatError(where + ": \"split\" must be present on all lines or none");
    if (!index.contains(r.item_id))
      throw FormatError(where + ": item " + std::to_string(r.item_id) + " has no content vector");
    auto [it, inserted] = per_user.try_emplace(user);
    if (inserted) user_order.push_back(user);
    it->second.push_back(r);
  }
  if (user_order.empty()) throw FormatError(path + ": no interactions");

  for (int64_t user_id : user_order) {
    auto& raw = per_user[user_id];
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawInteraction& a, const RawInteraction& b) { return a.ts < b.ts; });
    const int32_t u = static_cast<int32_t>(ds.users.size());
    UserRecord rec;
    rec.user_id = user_id;
    std::vector<const RawInteraction*> impressions;
    for (const RawInteraction& r : raw) {
      if (mode == 1 && r.split != 0) {
        impressions.push_back(&r);
        continue;
      }
      rec.items.push_back(index.at(r.item_id));
      rec.ts.push_back(r.ts);
    }
    auto make = [&](const RawInteraction& r, uint32_t history_len) {
      return Example{u, history_len, index.at(r.item_id), r.label, r.ts};
    };
    if (mode == 1) {
      for (const RawInteraction* r : impressions) {
        const auto hist = static_cast<uint32_t>(
            std::lower_bound(rec.ts.begin(), rec.ts.end(), r->ts) - rec.ts.begin());
        const Example e = make(*r, hist);
        (r->split == 1 ? ds.train : r->split == 2 ? ds.val : ds.test).push_back(e);
      }
    } else {
      const size_t n = raw.size();
      for (size_t i = 0; i < n; ++i) {
        const Example e = make(raw[i], static_cast<uint32_t>(i));
        (i + 1 == n ? ds.test : i + 2 == n ? ds.val : ds.train).push_back(e);
      }
    }
    ds.users.push_back(std::move(rec));
  }

  const fs::path meta_path = root / "meta.json";
  if (fs::exists(meta_path)) {
    const auto bytes = read_file_bytes(meta_path.string());
    const nlohmann::ordered_json meta = nlohmann::ordered_json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (meta.is_discarded()) throw FormatError(meta_path.string() + ": invalid JSON");
    ds.meta_json = meta.dump();
    if (meta.is_object() && meta.contains("bayes_auc") && meta["bayes_auc"].is_number())
      ds.bayes_auc = meta["bayes_auc"].get<double>();
  }
  return ds;
}

std::vector<uint8_t> dataset_fingerprint_bytes(const Dataset& ds) {
  ByteWriter w;
  w.put_u64(ds.items.size());
  for (const auto& cv : ds.items) {
    w.put_i64(cv.item_id);
    w.put_u32(static_cast<uint32_t>(cv.category));
    w.put_u64(cv.z.size());
    w.put_f32s(cv.z);
  }
  w.put_u64(ds.users.size());
  for (const auto& u : ds.users) {
    w.put_i64(u.user_id);
    w.put_u64(u.items.size());
    for (size_t i = 0; i < u.items.size(); ++i) {
      w.put_u32(static_cast<uint32_t>(u.items[i]));
      w.put_i64(u.ts[i]);
    }
  }
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    w.put_u64(split->size());
    for (const Example& e : *split) {
      w.put_u32(static_cast<uint32_t>(e.user));
      w.put_u32(e.history_len);
      w.put_u32(static_cast<uint32_t>(e.target));
      w.put_f32(e.label);
      w.put_i64(e.ts);
    }
  }
  w.put_bytes(ds.meta_json);
  w.put_f64(ds.bayes_auc);
  return w.release();
}

}  // namespace uxsid::synthdata
