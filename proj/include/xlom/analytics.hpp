// Copyright 2026 The xlom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xlom/clustering.hpp"
#include "xlom/corpus.hpp"
#include "xlom/error.hpp"
#include "xlom/sentiment.hpp"
#include "xlom/topics.hpp"

namespace xlom::analytics {

using corpus::RawDocument;
using json = nlohmann::json;

inline constexpr const char* kQuantileMethod = "linear interpolation at position p*(n-1) of the sorted values";
inline constexpr const char* kGarbageRule =
    "garbage sentences excluded from topic probabilities and reported as garbage_share";

// ---------------------------------------------------------------------------
// Scopes

enum class ScopeKind { article, comment_section };

inline std::string to_string(ScopeKind k) { return k == ScopeKind::article ? "article" : "comment_section"; }

struct DocScope {
  std::string scope_id;
  ScopeKind kind = ScopeKind::article;
  std::string article_id;  // the article, or the parent of the comment section
  std::vector<std::string> doc_ids;
  bool orphan = false;  // comments whose parent article is unknown
};

struct ScopeSet {
  std::vector<DocScope> scopes;  // ordered by scope_id
  std::vector<std::string> warnings;
};

// One scope per article and one per non-empty comment section. Comments with
// an unknown parent are grouped per missing parent under an orphan scope.
inline ScopeSet build_scopes(const std::vector<RawDocument>& documents, bool articles = true, bool comments = true) {
  ScopeSet out;
  std::set<std::string> article_ids;
  for (const auto& d : documents) {
    if (d.kind == corpus::DocKind::article) article_ids.insert(d.doc_id);
  }
  std::map<std::string, DocScope> by_id;
  for (const auto& d : documents) {
    if (d.kind == corpus::DocKind::article) {
      if (!articles) continue;
      DocScope s{"article:" + d.doc_id, ScopeKind::article, d.doc_id, {d.doc_id}, false};
      by_id.emplace(s.scope_id, std::move(s));
      continue;
    }
    if (!comments) continue;
    const std::string& parent = d.parent_id.value();
    const bool orphan = !article_ids.contains(parent);
    const std::string id = (orphan ? "orphan-comments:" : "comments:") + parent;
    auto [it, inserted] = by_id.try_emplace(id, DocScope{id, ScopeKind::comment_section, parent, {}, orphan});
    it->second.doc_ids.push_back(d.doc_id);
    if (orphan) out.warnings.push_back("comment '" + d.doc_id + "' references unknown article '" + parent + "'");
  }
  for (auto& [_, s] : by_id) {
    std::sort(s.doc_ids.begin(), s.doc_ids.end());
    out.scopes.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Topic distributions

struct TopicDistribution {
  std::string scope_id;
  std::map<std::string, double> probs;  // topic label -> share of non-garbage sentences
  double garbage_share = 0.0;
  std::size_t n_sentences = 0;
  std::size_t n_garbage = 0;
};

// `clusters` holds the cluster index of every sentence in the scope.
inline TopicDistribution topic_distribution(const std::string& scope_id, const std::vector<std::uint32_t>& clusters,
                                            const topics::TopicModel& model) {
  require(!clusters.empty(), "scope '", scope_id, "' has no sentences");
  TopicDistribution d;
  d.scope_id = scope_id;
  d.n_sentences = clusters.size();
  std::map<std::string, std::size_t> counts;
  for (auto c : clusters) {
    require(c < model.k, "scope '", scope_id, "': cluster ", c, " out of range");
    if (model.clusters[c].garbage) {
      ++d.n_garbage;
    } else {
      ++counts[model.label_of(c)];
    }
  }
  const std::size_t kept = d.n_sentences - d.n_garbage;
  for (const auto& [label, n] : counts) d.probs[label] = static_cast<double>(n) / static_cast<double>(kept);
  d.garbage_share = static_cast<double>(d.n_garbage) / static_cast<double>(d.n_sentences);
  return d;
}

// ---------------------------------------------------------------------------
// Sentiment summaries

struct SentimentSummary {
  std::string scope_id;
  std::string topic;
  std::size_t n = 0;
  std::optional<double> q1, median, q3;
};

// Linear interpolation at position p*(n-1) of an ascending list.
inline double quantile(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile of an empty list");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Filtered (zero-polarity) scores are excluded before the quantiles.
inline SentimentSummary sentiment_summary(const std::string& scope_id, const std::string& topic,
                                          const std::vector<sentiment::SentimentScore>& scores) {
  SentimentSummary s{scope_id, topic, 0, std::nullopt, std::nullopt, std::nullopt};
  std::vector<double> values;
  for (const auto& sc : scores) {
    if (!sc.filtered) values.push_back(sc.polarity);
  }
  s.n = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  return s;
}

// ---------------------------------------------------------------------------
// Scope aggregation

struct Aggregate {
  std::vector<TopicDistribution> distributions;
  std::vector<SentimentSummary> summaries;
  std::vector<std::string> warnings;
};

inline Aggregate aggregate(const ScopeSet& scopes, const std::vector<corpus::Sentence>& store,
                           const clustering::ClusteringRun& run, const topics::TopicModel& model,
                           const std::vector<sentiment::SentimentScore>& scores) {
  Aggregate out;
  out.warnings = scopes.warnings;
  std::unordered_map<std::string, std::vector<const corpus::Sentence*>> by_doc;
  for (const auto& s : store) by_doc[s.doc_id].push_back(&s);
  const auto assignments = topics::assignments_of(run);
  std::unordered_map<std::string, const sentiment::SentimentScore*> score_of;
  for (const auto& s : scores) score_of.emplace(s.sent_id, &s);

  for (const auto& scope : scopes.scopes) {
    std::vector<std::uint32_t> clusters;
    std::map<std::string, std::vector<sentiment::SentimentScore>> per_topic;
    for (const auto& doc : scope.doc_ids) {
      auto it = by_doc.find(doc);
      if (it == by_doc.end()) continue;
      for (const auto* s : it->second) {
        auto a = assignments.find(s->sent_id);
        require(a != assignments.end(), "sentence '", s->sent_id, "' has no cluster assignment");
        clusters.push_back(a->second);
        if (model.clusters.at(a->second).garbage) continue;
        auto sc = score_of.find(s->sent_id);
        require(sc != score_of.end(), "sentence '", s->sent_id, "' has no sentiment score");
        per_topic[model.label_of(a->second)].push_back(*sc->second);
      }
    }
    if (clusters.empty()) {
      out.warnings.push_back("scope '" + scope.scope_id + "' has no sentences after preprocessing; skipped");
      continue;
    }
    out.distributions.push_back(topic_distribution(scope.scope_id, clusters, model));
    for (const auto& [topic, list] : per_topic) out.summaries.push_back(sentiment_summary(scope.scope_id, topic, list));
  }
  return out;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void write_aggregate(const std::filesystem::path& dir, const Aggregate& agg) {
  std::filesystem::create_directories(dir);
  json dists = json::array();
  for (const auto& d : agg.distributions) {
    dists.push_back({{"scope_id", d.scope_id},
                     {"probs", d.probs},
                     {"garbage_share", d.garbage_share},
                     {"n_sentences", d.n_sentences},
                     {"n_garbage", d.n_garbage}});
  }
  json sums = json::array();
  for (const auto& s : agg.summaries) {
    sums.push_back({{"scope_id", s.scope_id},
                    {"topic", s.topic},
                    {"n", s.n},
                    {"q1", optional_number(s.q1)},
                    {"median", optional_number(s.median)},
                    {"q3", optional_number(s.q3)}});
  }
  {
    std::ofstream out(dir / "distributions.json", std::ios::binary | std::ios::trunc);
    out << json{{"garbage_rule", kGarbageRule}, {"distributions", dists}, {"warnings", agg.warnings}}.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "summaries.json", std::ios::binary | std::ios::trunc);
    out << json{{"quantile_method", kQuantileMethod}, {"summaries", sums}}.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "distributions.csv", std::ios::binary | std::ios::trunc);
    out << "scope_id,topic,prob,garbage_share,n_sentences\n";
    for (const auto& d : agg.distributions) {
      for (const auto& [topic, p] : d.probs) {
        out << topics::csv_field(d.scope_id) << ',' << topics::csv_field(topic) << ',' << topics::format_number(p)
            << ',' << topics::format_number(d.garbage_share) << ',' << d.n_sentences << '\n';
      }
    }
  }
  std::ofstream out(dir / "summaries.csv", std::ios::binary | std::ios::trunc);
  out << "scope_id,topic,n,q1,median,q3\n";
  auto opt = [](const std::optional<double>& v) { return v ? topics::format_number(*v) : std::string(); };
  for (const auto& s : agg.summaries) {
    out << topics::csv_field(s.scope_id) << ',' << topics::csv_field(s.topic) << ',' << s.n << ',' << opt(s.q1) << ','
        << opt(s.median) << ',' << opt(s.q3) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sankey flows

struct SankeyFlow {
  std::size_t from_k = 0;
  std::uint32_t from_cluster = 0;
  std::size_t to_k = 0;
  std::uint32_t to_cluster = 0;
  std::size_t count = 0;
};

struct FlowSet {
  std::vector<SankeyFlow> flows;  // ordered by (from_cluster, to_cluster)
  std::size_t common = 0;
  std::size_t dropped = 0;  // sentences present in only one of the runs
};

// count(a -> b) = |{s : run_a(s) = a and run_b(s) = b}| over the sentences
// both runs cover; zero counts are omitted.
inline FlowSet sankey_flows(const clustering::ClusteringRun& run_a, const clustering::ClusteringRun& run_b) {
  const auto b = topics::assignments_of(run_b);
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> counts;
  FlowSet out;
  for (std::size_t i = 0; i < run_a.ids.size(); ++i) {
    auto it = b.find(run_a.ids[i]);
    if (it == b.end()) {
      ++out.dropped;
      continue;
    }
    ++out.common;
    ++counts[{run_a.assignments[i], it->second}];
  }
  out.dropped += run_b.ids.size() - out.common;
  require(out.common > 0, "sankey: runs k=", run_a.k, " and k=", run_b.k, " share no sentences");
  for (const auto& [key, n] : counts) out.flows.push_back({run_a.k, key.first, run_b.k, key.second, n});
  return out;
}

struct SankeyNode {
  std::size_t k = 0;
  std::uint32_t cluster = 0;
  std::string label;
  bool garbage = false;
};

// Nodes for every cluster of every run in the ladder, links between
// consecutive runs. `node_info(k, cluster)` supplies label and garbage flag.
template <typename NodeInfo>
json sankey_json(const std::vector<const clustering::ClusteringRun*>& ladder, NodeInfo&& node_info) {
  require(ladder.size() >= 2, "sankey needs at least two runs");
  json nodes = json::array(), links = json::array(), dropped = json::array();
  std::map<std::pair<std::size_t, std::uint32_t>, std::size_t> node_index;
  for (const auto* run : ladder) {
    for (std::uint32_t c = 0; c < run->k; ++c) {
      const SankeyNode info = node_info(run->k, c);
      node_index[{run->k, c}] = nodes.size();
      nodes.push_back({{"run", "k" + std::to_string(run->k)}, {"cluster", c}, {"label", info.label}, {"garbage", info.garbage}});
    }
  }
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
    const auto flows = sankey_flows(*ladder[i], *ladder[i + 1]);
    for (const auto& f : flows.flows) {
      links.push_back({{"source", node_index.at({f.from_k, f.from_cluster})},
                       {"target", node_index.at({f.to_k, f.to_cluster})},
                       {"count", f.count}});
    }
    dropped.push_back(flows.dropped);
  }
  return {{"nodes", nodes}, {"links", links}, {"dropped", dropped}};
}

}  // namespace xlom::analytics
