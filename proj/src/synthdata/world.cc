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

#include "uxsid/synthdata/world.h"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "uxsid/common/error.h"
#include "uxsid/common/json_util.h"
#include "uxsid/common/parallel.h"
#include "uxsid/common/rng.h"

namespace uxsid::synthdata {

namespace {

constexpr uint64_t kItemStream = 1;
constexpr uint64_t kUserStreamBase = 1u << 20;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("world config: " + what);
}

size_t sample_weighted(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace

void WorldConfig::validate() const {
  require(n_clusters >= 1 && items_per_cluster >= 1 && content_dim >= 1 && n_users >= 1 &&
              seq_len >= 1,
          "all counts must be >= 1");
  require(cluster_spread >= 0.0, "cluster_spread must be >= 0");
  require(interests_per_user >= 1 && interests_per_user <= n_clusters,
          "interests_per_user must be in [1, n_clusters]");
  require(label_noise >= 0.0 && label_noise < 0.5, "label_noise must be in [0, 0.5)");
  require(positive_rate >= 0.0 && positive_rate <= 1.0, "positive_rate must be in [0, 1]");
  require(positive_rate == 1.0 || interests_per_user < n_clusters,
          "positive_rate < 1 needs clusters outside every user's interests");
  require(distal_begin <= distal_end && distal_end <= seq_len,
          "distal window must lie inside [0, seq_len)");
  const bool partial_window = distal_end > distal_begin && distal_end - distal_begin < seq_len;
  require(!partial_window || interests_per_user >= 2,
          "a distal window needs at least two interests per user");
  require(impressions_per_user >= 3, "impressions_per_user must be >= 3 (train/val/test)");
}

WorldConfig world_config_from_json(const std::string& text) {
  const nlohmann::json j = parse_json_line(text, "world config");
  if (!j.is_object()) throw FormatError("world config: expected a JSON object");
  WorldConfig c;
  const std::string w = "world config";
  static const std::vector<std::string> known = {
      "n_clusters",   "items_per_cluster", "content_dim",          "cluster_spread",
      "n_users",      "interests_per_user", "seq_len",             "distal_begin",
      "distal_end",   "impressions_per_user", "positive_rate",     "label_noise",
      "seed"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw FormatError(w + ": unknown field \"" + key + "\"");
  c.n_clusters = json_field_or<size_t>(j, "n_clusters", c.n_clusters, w);
  c.items_per_cluster = json_field_or<size_t>(j, "items_per_cluster", c.items_per_cluster, w);
  c.content_dim = json_field_or<size_t>(j, "content_dim", c.content_dim, w);
  c.cluster_spread = json_field_or<double>(j, "cluster_spread", c.cluster_spread, w);
  c.n_users = json_field_or<size_t>(j, "n_users", c.n_users, w);
  c.interests_per_user = json_field_or<size_t>(j, "interests_per_user", c.interests_per_user, w);
  c.seq_len = json_field_or<size_t>(j, "seq_len", c.seq_len, w);
  c.distal_begin = json_field_or<size_t>(j, "distal_begin", c.distal_begin, w);
  c.distal_end = json_field_or<size_t>(j, "distal_end", c.distal_end, w);
  c.impressions_per_user = json_field_or<size_t>(j, "impressions_per_user", c.impressions_per_user, w);
  c.positive_rate = json_field_or<double>(j, "positive_rate", c.positive_rate, w);
  c.label_noise = json_field_or<double>(j, "label_noise", c.label_noise, w);
  c.seed = json_field_or<uint64_t>(j, "seed", c.seed, w);
  c.validate();
  return c;
}

std::string world_config_to_json(const WorldConfig& c) {
  nlohmann::ordered_json j;
  j["n_clusters"] = c.n_clusters;
  j["items_per_cluster"] = c.items_per_cluster;
  j["content_dim"] = c.content_dim;
  j["cluster_spread"] = c.cluster_spread;
  j["n_users"] = c.n_users;
  j["interests_per_user"] = c.interests_per_user;
  j["seq_len"] = c.seq_len;
  j["distal_begin"] = c.distal_begin;
  j["distal_end"] = c.distal_end;
  j["impressions_per_user"] = c.impressions_per_user;
  j["positive_rate"] = c.positive_rate;
  j["label_noise"] = c.label_noise;
  j["seed"] = c.seed;
  return j.dump();
}

double bayes_auc(double pi, double eps) {
  const double a = pi * (1.0 - eps);          // positive, target in interests
  const double b = (1.0 - pi) * eps;          // positive, target outside
  const double c = pi * eps;                  // negative, target in interests
  const double e = (1.0 - pi) * (1.0 - eps);  // negative, target outside
  const double denom = (a + b) * (c + e);
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (a * e + 0.5 * (a * c + b * e)) / denom;
}

World generate_world(const WorldConfig& config, size_t threads) {
  config.validate();
  const size_t g = config.n_clusters;
  const size_t per = config.items_per_cluster;
  const size_t d = config.content_dim;
  World world;
  Dataset& ds = world.dataset;

  Rng item_rng(derive_seed(config.seed, kItemStream));
  std::vector<std::vector<double>> means(g, std::vector<double>(d));
  for (auto& m : means)
    for (double& v : m) v = item_rng.normal();
  ds.items.reserve(g * per);
  for (size_t c = 0; c < g; ++c) {
    for (size_t i = 0; i < per; ++i) {
      ContentVector cv;
      cv.item_id = static_cast<int64_t>(c * per + i);
      cv.category = static_cast<int32_t>(c);
      cv.z.resize(d);
      for (size_t k = 0; k < d; ++k)
        cv.z[k] = static_cast<float>(means[c][k] + config.cluster_spread * item_rng.normal());
      ds.items.push_back(std::move(cv));
    }
  }

  const size_t n_users = config.n_users;
  const size_t n_imp = config.impressions_per_user;
  const size_t n_val = std::max<size_t>(1, (n_imp * 3) / 20);
  const size_t n_test = n_val;
  const size_t n_train = n_imp - n_val - n_test;
  const size_t L = config.seq_len;
  world.truth.resize(n_users);
  ds.users.resize(n_users);
  std::vector<std::vector<Example>> per_user(n_users);

  parallel_for(n_users, threads, [&](size_t u) {
    Rng rng(derive_seed(config.seed, kUserStreamBase + u));
    UserTruth& truth = world.truth[u];
    std::vector<int32_t> clusters(g);
    std::iota(clusters.begin(), clusters.end(), 0);
    // Partial Fisher-Yates picks distinct interest clusters.
    for (size_t i = 0; i < config.interests_per_user; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(g - i));
      std::swap(clusters[i], clusters[j]);
    }
    truth.interests.assign(clusters.begin(), clusters.begin() + config.interests_per_user);
    std::vector<int32_t> outside(clusters.begin() + config.interests_per_user, clusters.end());
    std::sort(outside.begin(), outside.end());
    truth.weights.resize(config.interests_per_user);
    double total = 0.0;
    for (double& w : truth.weights) total += (w = rng.gamma(1.0));
    for (double& w : truth.weights) w /= total;
    const size_t rarest = static_cast<size_t>(
        std::min_element(truth.weights.begin(), truth.weights.end()) - truth.weights.begin());
    const bool planted = config.distal_end > config.distal_begin;
    truth.distal_cluster = planted ? truth.interests[rarest] : -1;

    std::vector<double> common = truth.weights;
    if (planted && config.interests_per_user > 1) common[rarest] = 0.0;

    UserRecord& rec = ds.users[u];
    rec.user_id = static_cast<int64_t>(u);
    rec.items.resize(L);
    rec.ts.resize(L);
    for (size_t pos = 0; pos < L; ++pos) {
      const bool in_window = pos >= config.distal_begin && pos < config.distal_end;
      const size_t cluster = in_window ? static_cast<size_t>(truth.distal_cluster)
                                       : static_cast<size_t>(truth.interests[sample_weighted(rng, common)]);
      rec.items[pos] = static_cast<int32_t>(cluster * per + rng.below(per));
      rec.ts[pos] = static_cast<int64_t>(pos);
    }

    auto& examples = per_user[u];
    for (size_t k = 0; k < n_imp; ++k) {
      const bool relevant = outside.empty() || rng.bernoulli(config.positive_rate);
      const size_t cluster =
          relevant ? static_cast<size_t>(truth.interests[rng.below(truth.interests.size())])
                   : static_cast<size_t>(outside[rng.below(outside.size())]);
      Example ex;
      ex.user = static_cast<int32_t>(u);
      ex.history_len = static_cast<uint32_t>(L);
      ex.target = static_cast<int32_t>(cluster * per + rng.below(per));
      const bool flip = rng.bernoulli(config.label_noise);
      ex.label = (relevant != flip) ? 1.0f : 0.0f;
      ex.ts = static_cast<int64_t>(L + k);
      examples.push_back(ex);
    }
  });

  for (size_t u = 0; u < n_users; ++u) {
    const auto& ex = per_user[u];
    ds.train.insert(ds.train.end(), ex.begin(), ex.begin() + n_train);
    ds.val.insert(ds.val.end(), ex.begin() + n_train, ex.begin() + n_train + n_val);
    ds.test.insert(ds.test.end(), ex.begin() + n_train + n_val, ex.end());
  }

  ds.bayes_auc = bayes_auc(config.positive_rate, config.label_noise);
  nlohmann::ordered_json meta;
  meta["generator"] = "uxsid-synthetic-world";
  meta["config"] = nlohmann::ordered_json::parse(world_config_to_json(config));
  meta["bayes_auc"] = ds.bayes_auc;
  ds.meta_json = meta.dump();
  return world;
}

}  // namespace uxsid::synthdata
