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
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xlom/clustering.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"
#include "xlom/stopwords.hpp"
#include "xlom/unicode.hpp"

namespace xlom::topics {

using clustering::ClusteringRun;
using corpus::Sentence;
using embeddings::EmbeddingMatrix;
using json = nlohmann::json;

using Assignments = std::unordered_map<std::string, std::uint32_t>;

inline Assignments assignments_of(const ClusteringRun& run) {
  Assignments a;
  a.reserve(run.ids.size());
  for (std::size_t i = 0; i < run.ids.size(); ++i) a.emplace(run.ids[i], run.assignments[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Term extraction

struct TermOptions {
  std::size_t min_df = 3;
  bool stem = true;
  std::set<std::string> stopwords;  // folded forms
};

inline TermOptions default_term_options(const std::string& lang) {
  TermOptions o;
  o.stopwords = text::bundled_stopwords(lang);
  return o;
}

// Folded tokens with stopwords removed before and after stemming.
inline std::vector<std::string> terms(std::string_view sentence, const std::string& lang, const TermOptions& options) {
  std::vector<std::string> out;
  for (auto& token : unicode::word_tokens(sentence)) {
    if (options.stopwords.contains(token)) continue;
    if (options.stem) token = text::stem(token, lang);
    if (options.stopwords.contains(token)) continue;
    out.push_back(std::move(token));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Term statistics

struct TermStats {
  std::string lang;
  std::size_t k = 0;
  std::size_t n_sentences = 0;
  std::vector<std::string> vocab;                 // sorted
  std::vector<std::size_t> doc_freq;              // parallel to vocab
  std::vector<double> corpus_mass;                // t_l(w), sums to 1
  std::vector<std::vector<double>> cluster_mass;  // t_{l,c}(w), each sums to 1 or is all zero
  std::vector<std::size_t> cluster_sentences;     // lang sentences per cluster

  bool scope_empty(std::size_t cluster) const {
    const auto& m = cluster_mass.at(cluster);
    return std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; });
  }

  std::optional<std::size_t> term_index(const std::string& term) const {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), term);
    if (it == vocab.end() || *it != term) return std::nullopt;
    return static_cast<std::size_t>(it - vocab.begin());
  }
};

class EmptyScopeError : public Error {
 public:
  EmptyScopeError(std::string lang, std::size_t cluster)
      : Error("cluster " + std::to_string(cluster) + " has no '" + lang + "' terms to score"), cluster_(cluster) {}
  std::size_t cluster() const noexcept { return cluster_; }

 private:
  std::size_t cluster_;
};

namespace detail {

inline std::vector<double> l1_normalized(std::vector<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total > 0.0) {
    for (double& x : v) x /= total;
  }
  return v;
}

}  // namespace detail

// tf(w, scope) = occurrences of w in the scope's sentences
// idf(w)       = ln((1 + N) / (1 + df(w))) + 1, N = sentences in `lang`
// mass         = tf * idf, L1-normalized over the scope's vocabulary
// Terms with df < min_df are dropped before normalization.
inline TermStats term_stats(const std::vector<Sentence>& sentences, const Assignments& assignments,
                            const std::string& lang, std::size_t k, const TermOptions& options) {
  TermStats stats;
  stats.lang = lang;
  stats.k = k;
  stats.cluster_sentences.assign(k, 0);

  struct Doc {
    std::uint32_t cluster;
    std::vector<std::string> terms;
  };
  std::vector<Doc> docs;
  std::map<std::string, std::size_t> df;
  for (const auto& s : sentences) {
    if (s.lang != lang) continue;
    auto it = assignments.find(s.sent_id);
    require(it != assignments.end(), "sentence '", s.sent_id, "' has no cluster assignment");
    require(it->second < k, "sentence '", s.sent_id, "' assigned to cluster ", it->second, " >= k = ", k);
    Doc d{it->second, terms(s.text, lang, options)};
    std::set<std::string> unique(d.terms.begin(), d.terms.end());
    for (const auto& t : unique) ++df[t];
    ++stats.cluster_sentences[d.cluster];
    docs.push_back(std::move(d));
  }
  stats.n_sentences = docs.size();
  require(stats.n_sentences > 0, "no sentences for language '", lang, "'");

  std::unordered_map<std::string, std::size_t> index;
  for (const auto& [term, count] : df) {
    if (count < options.min_df) continue;
    index.emplace(term, stats.vocab.size());
    stats.vocab.push_back(term);
    stats.doc_freq.push_back(count);
  }
  const std::size_t V = stats.vocab.size();
  require(V > 0, "no terms with df >= ", options.min_df, " for language '", lang, "'");

  std::vector<double> idf(V);
  const double N = static_cast<double>(stats.n_sentences);
  for (std::size_t w = 0; w < V; ++w) idf[w] = std::log((1.0 + N) / (1.0 + static_cast<double>(stats.doc_freq[w]))) + 1.0;

  std::vector<double> corpus_tf(V, 0.0);
  std::vector<std::vector<double>> cluster_tf(k, std::vector<double>(V, 0.0));
  for (const auto& d : docs) {
    for (const auto& t : d.terms) {
      auto it = index.find(t);
      if (it == index.end()) continue;
      corpus_tf[it->second] += 1.0;
      cluster_tf[d.cluster][it->second] += 1.0;
    }
  }
  for (std::size_t w = 0; w < V; ++w) corpus_tf[w] *= idf[w];
  stats.corpus_mass = detail::l1_normalized(std::move(corpus_tf));
  stats.cluster_mass.reserve(k);
  for (auto& tf : cluster_tf) {
    for (std::size_t w = 0; w < V; ++w) tf[w] *= idf[w];
    stats.cluster_mass.push_back(detail::l1_normalized(std::move(tf)));
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Clarity

struct TermScore {
  std::string term;
  double score = 0.0;
};

inline double clarity_term(double cluster_mass, double corpus_mass) {
  if (cluster_mass <= 0.0) return 0.0;
  require(corpus_mass > 0.0, "clarity: term has cluster mass but no corpus mass");
  return cluster_mass * std::log2(cluster_mass / corpus_mass);
}

// score(w) = t_c(w) * log2(t_c(w) / t(w)) for every w with t_c(w) > 0,
// descending, ties broken lexicographically.
inline std::vector<TermScore> clarity(const TermStats& stats, std::size_t cluster) {
  require(cluster < stats.k, "clarity: cluster ", cluster, " out of range");
  if (stats.scope_empty(cluster)) throw EmptyScopeError(stats.lang, cluster);
  const auto& mass = stats.cluster_mass[cluster];
  std::vector<TermScore> out;
  for (std::size_t w = 0; w < stats.vocab.size(); ++w) {
    if (mass[w] <= 0.0) continue;
    out.push_back({stats.vocab[w], clarity_term(mass[w], stats.corpus_mass[w])});
  }
  std::sort(out.begin(), out.end(), [](const TermScore& a, const TermScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  return out;
}

// Domain-specific high-frequency words are compared after the same folding
// and stemming the ranked terms went through.
inline std::set<std::string> normalize_filter(const std::set<std::string>& words, const std::string& lang,
                                              bool stem) {
  std::set<std::string> out;
  for (const auto& w : words) {
    for (auto& token : unicode::word_tokens(w)) {
      out.insert(token);
      if (stem) out.insert(text::stem(token, lang));
    }
  }
  return out;
}

inline std::vector<TermScore> top_words(const std::vector<TermScore>& ranked, std::size_t n,
                                        const std::set<std::string>& domain_filter = {}) {
  std::vector<TermScore> out;
  for (const auto& t : ranked) {
    if (out.size() >= n) break;
    if (domain_filter.contains(t.term)) continue;
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Top sentences

struct ScoredSentence {
  std::string sent_id;
  double cosine = 0.0;
};

using SentenceIndex = std::unordered_map<std::string, const Sentence*>;

inline SentenceIndex index_sentences(const std::vector<Sentence>& store) {
  SentenceIndex idx;
  idx.reserve(store.size());
  for (const auto& s : store) idx.emplace(s.sent_id, &s);
  return idx;
}

// Members of `cluster` (restricted to `lang` when given) with the highest
// cosine to the centroid, descending, ties by sent_id.
inline std::vector<ScoredSentence> top_sentences(const EmbeddingMatrix& X, const ClusteringRun& run,
                                                 const SentenceIndex& sentences, std::size_t cluster,
                                                 const std::optional<std::string>& lang, std::size_t m) {
  require(cluster < run.k, "top_sentences: cluster ", cluster, " out of range");
  require(X.dim() == run.dim, "top_sentences: embedding dim ", X.dim(), " does not match run dim ", run.dim);
  std::vector<ScoredSentence> scored;
  const auto centroid = run.centroid(cluster);
  for (std::size_t i = 0; i < run.ids.size(); ++i) {
    if (run.assignments[i] != cluster) continue;
    const auto& id = run.ids[i];
    if (lang) {
      auto it = sentences.find(id);
      require(it != sentences.end(), "sentence '", id, "' missing from store");
      if (it->second->lang != *lang) continue;
    }
    scored.push_back({id, embeddings::cosine(X.row(X.index_of(id)), centroid)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredSentence& a, const ScoredSentence& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.sent_id < b.sent_id;
  });
  if (scored.size() > m) scored.resize(m);
  return scored;
}

// ---------------------------------------------------------------------------
// Topic model

struct ClusterTopic {
  std::size_t index = 0;
  std::size_t size = 0;
  std::map<std::string, std::vector<TermScore>> top_words;
  std::map<std::string, std::vector<ScoredSentence>> top_sentences;
  std::optional<std::string> label;
  bool garbage = false;
  bool garbage_auto = false;
  std::optional<bool> garbage_override;
  double mean_top_sentence_len = 0.0;
};

struct TopicModel {
  std::size_t k = 0;
  std::vector<std::string> langs;
  std::vector<ClusterTopic> clusters;

  std::string label_of(std::size_t c) const {
    const auto& t = clusters.at(c);
    if (t.label) return *t.label;
    return (t.garbage ? "garbage-" : "topic-") + std::to_string(c);
  }
};

struct TopicOptions {
  std::size_t top_words = 10;
  std::size_t top_sentences = 3;
  std::size_t garbage_top_n = 10;
  double garbage_threshold_len = 25.0;
  std::map<std::string, TermOptions> term_options;               // default_term_options(lang) when absent
  std::map<std::string, std::set<std::string>> domain_filters;  // surface forms, per lang
};

struct LabelEntry {
  std::optional<std::string> label;
  std::optional<bool> garbage;
};

using LabelMap = std::map<std::size_t, LabelEntry>;

inline LabelMap parse_label_map(const json& j) {
  require(j.is_object(), "label map must be a JSON object");
  LabelMap map;
  for (const auto& [key, value] : j.items()) {
    require(!key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); }),
            "label map key '", key, "' is not a cluster index");
    require(value.is_object(), "label map entry '", key, "' must be an object");
    LabelEntry e;
    if (value.contains("label") && !value.at("label").is_null()) e.label = value.at("label").get<std::string>();
    if (value.contains("garbage") && !value.at("garbage").is_null()) e.garbage = value.at("garbage").get<bool>();
    map[std::stoul(key)] = e;
  }
  return map;
}

inline LabelMap load_label_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open label map ", path.string());
  return parse_label_map(json::parse(in));
}

// Auto flag: mean char_len of the pooled top sentences below threshold_len.
// An explicit override from the label map wins in either direction.
inline void flag_garbage(TopicModel& model, double threshold_len) {
  for (auto& c : model.clusters) {
    c.garbage_auto = c.mean_top_sentence_len < threshold_len;
    c.garbage = c.garbage_override.value_or(c.garbage_auto);
  }
}

inline void apply_labels(TopicModel& model, const LabelMap& labels) {
  std::vector<std::size_t> bad;
  for (const auto& [index, _] : labels) {
    if (index >= model.k) bad.push_back(index);
  }
  if (!bad.empty()) {
    std::ostringstream oss;
    for (std::size_t i = 0; i < bad.size(); ++i) oss << (i ? ", " : "") << bad[i];
    fail("label map entries out of range for k = ", model.k, ": ", oss.str());
  }
  for (auto& c : model.clusters) {
    auto it = labels.find(c.index);
    if (it != labels.end()) {
      if (it->second.label) c.label = it->second.label;
      if (it->second.garbage) c.garbage_override = it->second.garbage;
    }
    c.garbage = c.garbage_override.value_or(c.garbage_auto);
    if (!c.label && !c.garbage) c.label = "topic-" + std::to_string(c.index);
  }
}

inline TopicModel build_topic_model(const std::vector<Sentence>& store, const EmbeddingMatrix& X,
                                    const ClusteringRun& run, const std::vector<std::string>& langs,
                                    const TopicOptions& options) {
  TopicModel model;
  model.k = run.k;
  model.langs = langs;
  const auto sizes = run.cluster_sizes();
  for (std::size_t c = 0; c < run.k; ++c) {
    ClusterTopic t;
    t.index = c;
    t.size = sizes[c];
    model.clusters.push_back(std::move(t));
  }
  const auto assignments = assignments_of(run);
  const auto index = index_sentences(store);
  for (const auto& lang : langs) {
    auto it = options.term_options.find(lang);
    const TermOptions term_opts = it != options.term_options.end() ? it->second : default_term_options(lang);
    std::set<std::string> filter;
    if (auto f = options.domain_filters.find(lang); f != options.domain_filters.end()) {
      filter = normalize_filter(f->second, lang, term_opts.stem);
    }
    std::optional<TermStats> stats;
    try {
      stats = term_stats(store, assignments, lang, run.k, term_opts);
    } catch (const Error&) {
      stats.reset();  // language without usable terms: no top words
    }
    for (auto& t : model.clusters) {
      if (stats && !stats->scope_empty(t.index)) {
        t.top_words[lang] = top_words(clarity(*stats, t.index), options.top_words, filter);
      } else {
        t.top_words[lang] = {};
      }
      t.top_sentences[lang] = top_sentences(X, run, index, t.index, lang, options.top_sentences);
    }
  }
  for (auto& t : model.clusters) {
    const auto pooled = top_sentences(X, run, index, t.index, std::nullopt, options.garbage_top_n);
    double total = 0.0;
    for (const auto& s : pooled) total += static_cast<double>(index.at(s.sent_id)->char_len);
    t.mean_top_sentence_len = pooled.empty() ? 0.0 : total / static_cast<double>(pooled.size());
  }
  flag_garbage(model, options.garbage_threshold_len);
  return model;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const TopicModel& model) {
  json clusters = json::array();
  for (const auto& c : model.clusters) {
    json words = json::object(), sents = json::object();
    for (const auto& [lang, list] : c.top_words) {
      json arr = json::array();
      for (const auto& t : list) arr.push_back({{"term", t.term}, {"score", t.score}});
      words[lang] = arr;
    }
    for (const auto& [lang, list] : c.top_sentences) {
      json arr = json::array();
      for (const auto& s : list) arr.push_back({{"sent_id", s.sent_id}, {"cosine", s.cosine}});
      sents[lang] = arr;
    }
    clusters.push_back({{"cluster", c.index},
                        {"size", c.size},
                        {"label", c.label ? json(*c.label) : json(nullptr)},
                        {"garbage", c.garbage},
                        {"garbage_auto", c.garbage_auto},
                        {"mean_top_sentence_len", c.mean_top_sentence_len},
                        {"top_words", words},
                        {"top_sentences", sents}});
  }
  return {{"k", model.k}, {"langs", model.langs}, {"clusters", clusters}};
}

inline TopicModel topic_model_from_json(const json& j) {
  TopicModel model;
  model.k = j.at("k").get<std::size_t>();
  model.langs = j.at("langs").get<std::vector<std::string>>();
  for (const auto& c : j.at("clusters")) {
    ClusterTopic t;
    t.index = c.at("cluster").get<std::size_t>();
    t.size = c.at("size").get<std::size_t>();
    if (!c.at("label").is_null()) t.label = c.at("label").get<std::string>();
    t.garbage = c.at("garbage").get<bool>();
    t.garbage_auto = c.at("garbage_auto").get<bool>();
    t.mean_top_sentence_len = c.at("mean_top_sentence_len").get<double>();
    for (const auto& [lang, arr] : c.at("top_words").items()) {
      auto& list = t.top_words[lang];
      for (const auto& w : arr) list.push_back({w.at("term").get<std::string>(), w.at("score").get<double>()});
    }
    for (const auto& [lang, arr] : c.at("top_sentences").items()) {
      auto& list = t.top_sentences[lang];
      for (const auto& s : arr) list.push_back({s.at("sent_id").get<std::string>(), s.at("cosine").get<double>()});
    }
    model.clusters.push_back(std::move(t));
  }
  require(model.clusters.size() == model.k, "topic model has ", model.clusters.size(), " clusters, k = ", model.k);
  return model;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_number(double v) { return json(v).dump(); }

inline void write_topic_reports(const std::filesystem::path& dir, const TopicModel& model) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "topics.json", std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write ", (dir / "topics.json").string());
    out << to_json(model).dump(2) << '\n';
  }
  std::ofstream words(dir / "top_words.csv", std::ios::binary | std::ios::trunc);
  words << "cluster,lang,rank,term,score\n";
  std::ofstream sents(dir / "top_sentences.csv", std::ios::binary | std::ios::trunc);
  sents << "cluster,lang,rank,sent_id,score\n";
  for (const auto& c : model.clusters) {
    for (const auto& [lang, list] : c.top_words) {
      for (std::size_t r = 0; r < list.size(); ++r) {
        words << c.index << ',' << lang << ',' << r + 1 << ',' << csv_field(list[r].term) << ','
              << format_number(list[r].score) << '\n';
      }
    }
    for (const auto& [lang, list] : c.top_sentences) {
      for (std::size_t r = 0; r < list.size(); ++r) {
        sents << c.index << ',' << lang << ',' << r + 1 << ',' << csv_field(list[r].sent_id) << ','
              << format_number(list[r].cosine) << '\n';
      }
    }
  }
}

}  // namespace xlom::topics
