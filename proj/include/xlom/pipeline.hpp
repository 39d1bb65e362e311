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

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xlom/analytics.hpp"
#include "xlom/clustering.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"
#include "xlom/hash.hpp"
#include "xlom/http_provider.hpp"
#include "xlom/sentiment.hpp"
#include "xlom/topics.hpp"

namespace xlom::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Run directory layout.
namespace layout {
inline const fs::path kIngest = "ingest";
inline const fs::path kEmbeddings = "embeddings";
inline const fs::path kRuns = "runs";
inline const fs::path kTopics = "topics";
inline const fs::path kSentiment = "sentiment";
inline const fs::path kReports = "reports";
inline const fs::path kManifest = "manifest.json";
inline const fs::path kLock = ".lock";

inline fs::path run_dir(std::size_t k) { return kRuns / ("k" + std::to_string(k)); }
}  // namespace layout

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// Configuration

struct EmbeddingConfig {
  std::string provider = "file";  // file | http
  fs::path matrix;
  fs::path ids;
  std::string endpoint;
  std::size_t batch_size = 64;
  bool normalize = true;
};

struct ClusteringConfig {
  std::size_t k_min = 1;
  std::size_t k_max = 30;
  std::size_t k_limit = 30;
  std::uint64_t seed = 42;
  clustering::KMeansOptions kmeans;
  std::optional<std::size_t> k;  // use this k instead of the AIC choice
};

struct TopicsConfig {
  std::size_t top_words = 10;
  std::size_t top_sentences = 3;
  std::size_t min_df = 3;
  bool stem = true;
  double garbage_threshold_len = 25.0;
  std::size_t garbage_top_n = 10;
  std::map<std::string, fs::path> stopwords;
  std::map<std::string, fs::path> domain_stopwords;
  std::optional<fs::path> labels;
};

struct PipelineConfig {
  std::vector<std::string> langs;
  std::map<std::string, fs::path> corpus;
  std::optional<fs::path> abbreviations;
  EmbeddingConfig embeddings;
  ClusteringConfig clustering;
  TopicsConfig topics;
  std::map<std::string, fs::path> lexicons;
  bool article_scopes = true;
  bool comment_scopes = true;
  std::vector<std::size_t> sankey = {5, 10, 15, 20};
  fs::path out;
};

namespace detail {

inline fs::path resolve(const fs::path& base, const json& j) {
  fs::path p = j.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

inline std::map<std::string, fs::path> path_map(const fs::path& base, const json& j) {
  std::map<std::string, fs::path> out;
  if (j.is_null()) return out;
  require(j.is_object(), "expected an object of language -> path");
  for (const auto& [lang, p] : j.items()) out[lang] = resolve(base, p);
  return out;
}

inline std::string path_string(const fs::path& p) { return p.lexically_normal().generic_string(); }

inline json path_map_json(const std::map<std::string, fs::path>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = path_string(v);
  return j;
}

}  // namespace detail

// Relative paths resolve against `base` (the config file's directory).
inline PipelineConfig parse_config(const json& j, const fs::path& base) {
  require(j.is_object(), "config must be a JSON object");
  PipelineConfig c;
  c.langs = j.at("langs").get<std::vector<std::string>>();
  c.corpus = detail::path_map(base, j.at("corpus"));
  if (j.contains("abbreviations") && !j.at("abbreviations").is_null()) {
    c.abbreviations = detail::resolve(base, j.at("abbreviations"));
  }
  if (j.contains("embeddings")) {
    const auto& e = j.at("embeddings");
    c.embeddings.provider = e.value("provider", "file");
    if (e.contains("matrix") && !e.at("matrix").is_null()) c.embeddings.matrix = detail::resolve(base, e.at("matrix"));
    if (e.contains("ids") && !e.at("ids").is_null()) c.embeddings.ids = detail::resolve(base, e.at("ids"));
    c.embeddings.endpoint = e.value("endpoint", std::string());
    c.embeddings.batch_size = e.value("batch_size", std::size_t{64});
    c.embeddings.normalize = e.value("normalize", true);
  }
  if (j.contains("clustering")) {
    const auto& k = j.at("clustering");
    c.clustering.k_min = k.value("k_min", std::size_t{1});
    c.clustering.k_max = k.value("k_max", std::size_t{30});
    c.clustering.k_limit = k.value("k_limit", std::size_t{30});
    c.clustering.seed = k.value("seed", std::uint64_t{42});
    c.clustering.kmeans.n_init = k.value("n_init", std::size_t{10});
    c.clustering.kmeans.max_iter = k.value("max_iter", std::size_t{300});
    c.clustering.kmeans.tol = k.value("tol", 1e-4);
    if (k.contains("k") && !k.at("k").is_null()) c.clustering.k = k.at("k").get<std::size_t>();
  }
  if (j.contains("topics")) {
    const auto& t = j.at("topics");
    c.topics.top_words = t.value("top_words", std::size_t{10});
    c.topics.top_sentences = t.value("top_sentences", std::size_t{3});
    c.topics.min_df = t.value("min_df", std::size_t{3});
    c.topics.stem = t.value("stem", true);
    c.topics.garbage_threshold_len = t.value("garbage_threshold_len", 25.0);
    c.topics.garbage_top_n = t.value("garbage_top_n", std::size_t{10});
    if (t.contains("stopwords")) c.topics.stopwords = detail::path_map(base, t.at("stopwords"));
    if (t.contains("domain_stopwords")) c.topics.domain_stopwords = detail::path_map(base, t.at("domain_stopwords"));
    if (t.contains("labels") && !t.at("labels").is_null()) c.topics.labels = detail::resolve(base, t.at("labels"));
  }
  if (j.contains("sentiment")) c.lexicons = detail::path_map(base, j.at("sentiment").at("lexicons"));
  if (j.contains("aggregate")) {
    const auto scopes = j.at("aggregate").value("scopes", std::vector<std::string>{"article", "comments"});
    c.article_scopes = std::find(scopes.begin(), scopes.end(), "article") != scopes.end();
    c.comment_scopes = std::find(scopes.begin(), scopes.end(), "comments") != scopes.end();
  }
  if (j.contains("sankey")) c.sankey = j.at("sankey").get<std::vector<std::size_t>>();
  if (j.contains("out") && !j.at("out").is_null()) c.out = detail::resolve(base, j.at("out"));
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open config ", path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail("config ", path.string(), ": ", e.what());
  }
  return parse_config(j, path.parent_path());
}

// Canonical JSON form of the config, used for the manifest snapshot and
// stage hashes.
inline json to_json(const PipelineConfig& c) {
  return {{"langs", c.langs},
          {"corpus", detail::path_map_json(c.corpus)},
          {"abbreviations", c.abbreviations ? json(detail::path_string(*c.abbreviations)) : json(nullptr)},
          {"embeddings",
           {{"provider", c.embeddings.provider},
            {"matrix", detail::path_string(c.embeddings.matrix)},
            {"ids", detail::path_string(c.embeddings.ids)},
            {"endpoint", c.embeddings.endpoint},
            {"batch_size", c.embeddings.batch_size},
            {"normalize", c.embeddings.normalize}}},
          {"clustering",
           {{"k_min", c.clustering.k_min},
            {"k_max", c.clustering.k_max},
            {"k_limit", c.clustering.k_limit},
            {"seed", c.clustering.seed},
            {"n_init", c.clustering.kmeans.n_init},
            {"max_iter", c.clustering.kmeans.max_iter},
            {"tol", c.clustering.kmeans.tol},
            {"k", c.clustering.k ? json(*c.clustering.k) : json(nullptr)}}},
          {"topics",
           {{"top_words", c.topics.top_words},
            {"top_sentences", c.topics.top_sentences},
            {"min_df", c.topics.min_df},
            {"stem", c.topics.stem},
            {"garbage_threshold_len", c.topics.garbage_threshold_len},
            {"garbage_top_n", c.topics.garbage_top_n},
            {"stopwords", detail::path_map_json(c.topics.stopwords)},
            {"domain_stopwords", detail::path_map_json(c.topics.domain_stopwords)},
            {"labels", c.topics.labels ? json(detail::path_string(*c.topics.labels)) : json(nullptr)}}},
          {"sentiment", {{"lexicons", detail::path_map_json(c.lexicons)}}},
          {"aggregate", {{"article", c.article_scopes}, {"comments", c.comment_scopes}}},
          {"sankey", c.sankey},
          {"out", detail::path_string(c.out)}};
}

// Checks everything that can be checked before any stage runs.
inline void validate(const PipelineConfig& c) {
  require(!c.langs.empty(), "config: langs is empty");
  require(!c.corpus.empty(), "config: no corpus files");
  require(!c.out.empty(), "config: no output directory");
  auto must_exist = [](const fs::path& p, const std::string& what) {
    require(fs::exists(p), "config: ", what, " not found: ", p.string());
  };
  for (const auto& [lang, p] : c.corpus) must_exist(p, "corpus file for '" + lang + "'");
  if (c.abbreviations) must_exist(*c.abbreviations, "abbreviation file");
  if (c.embeddings.provider == "file") {
    must_exist(c.embeddings.matrix, "embedding matrix");
    must_exist(c.embeddings.ids, "embedding ids");
  } else if (c.embeddings.provider == "http") {
    require(!c.embeddings.endpoint.empty(), "config: http provider needs an endpoint");
  } else {
    fail("config: unknown embedding provider '", c.embeddings.provider, "'");
  }
  require(c.embeddings.batch_size >= 1, "config: batch_size must be at least 1");
  const auto& k = c.clustering;
  require(k.k_min >= 1 && k.k_min <= k.k_max, "config: need 1 <= k_min <= k_max");
  require(k.k_max <= k.k_limit, "config: k_max ", k.k_max, " exceeds k_limit ", k.k_limit);
  if (k.k) require(*k.k >= k.k_min && *k.k <= k.k_max, "config: k = ", *k.k, " outside the sweep range");
  for (auto step : c.sankey) {
    require(step >= k.k_min && step <= k.k_max, "config: sankey step k", step, " outside the sweep range");
  }
  for (const auto& lang : c.langs) {
    require(c.lexicons.contains(lang), "config: no sentiment lexicon for '", lang, "'");
  }
  for (const auto& [lang, p] : c.lexicons) must_exist(p, "sentiment lexicon for '" + lang + "'");
  for (const auto& [lang, p] : c.topics.stopwords) must_exist(p, "stopword list for '" + lang + "'");
  for (const auto& [lang, p] : c.topics.domain_stopwords) must_exist(p, "domain stopword list for '" + lang + "'");
  if (c.topics.labels) must_exist(*c.topics.labels, "label map");
}

// ---------------------------------------------------------------------------
// Manifest

struct StageRecord {
  bool complete = false;
  std::string input_hash;
  std::map<std::string, std::string> outputs;  // run-relative path -> sha256
};

struct RunManifest {
  json config;
  std::string tool_version = kToolVersion;
  std::string encoder_tag;
  std::map<std::string, StageRecord> stages;
  std::vector<std::string> executed;  // stages run by the last invocation (not persisted)
};

inline json to_json(const RunManifest& m) {
  json stages = json::object();
  for (const auto& [name, s] : m.stages) {
    stages[name] = {{"complete", s.complete}, {"input_hash", s.input_hash}, {"outputs", s.outputs}};
  }
  return {{"tool_version", m.tool_version}, {"encoder_tag", m.encoder_tag}, {"config", m.config}, {"stages", stages}};
}

inline RunManifest read_manifest(const fs::path& run) {
  RunManifest m;
  const auto path = run / layout::kManifest;
  if (!fs::exists(path)) return m;
  std::ifstream in(path, std::ios::binary);
  const json j = json::parse(in);
  m.config = j.value("config", json::object());
  m.tool_version = j.value("tool_version", std::string(kToolVersion));
  m.encoder_tag = j.value("encoder_tag", std::string());
  for (const auto& [name, s] : j.at("stages").items()) {
    StageRecord r;
    r.complete = s.at("complete").get<bool>();
    r.input_hash = s.at("input_hash").get<std::string>();
    r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
    m.stages[name] = std::move(r);
  }
  return m;
}

// Write-then-rename so readers never see a partial manifest.
inline void write_manifest(const fs::path& run, const RunManifest& m) {
  const auto tmp = run / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write ", tmp.string());
    out << to_json(m).dump(2) << '\n';
    require(out.good(), "write failed: ", tmp.string());
  }
  fs::rename(tmp, run / layout::kManifest);
}

// Exclusive lock on a run directory, released on destruction.
class RunLock {
 public:
  explicit RunLock(const fs::path& run) : path_(run / layout::kLock) {
    fs::create_directories(run);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    require(fd_ >= 0, "run directory ", run.string(), " is locked by another pipeline (", path_.string(), ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;
  ~RunLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Stages

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest", "embed", "cluster", "topics", "sentiment", "aggregate", "sankey"};
  return names;
}

inline const std::map<std::string, std::vector<std::string>>& stage_upstream() {
  static const std::map<std::string, std::vector<std::string>> up = {
      {"ingest", {}},
      {"embed", {"ingest"}},
      {"cluster", {"embed"}},
      {"topics", {"ingest", "embed", "cluster"}},
      {"sentiment", {"ingest"}},
      {"aggregate", {"ingest", "cluster", "topics", "sentiment"}},
      {"sankey", {"cluster", "topics"}}};
  return up;
}

namespace detail {

inline std::set<std::string> read_word_list(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open word list ", path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    out.insert(unicode::fold(line.substr(first, last - first + 1)));
  }
  return out;
}

inline void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write ", path.string());
  out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open ", path.string());
  return json::parse(in);
}

inline std::vector<std::string> files_under(const fs::path& run, const fs::path& rel) {
  std::vector<std::string> out;
  const auto root = run / rel;
  if (!fs::exists(root)) return out;
  if (fs::is_regular_file(root)) return {rel.generic_string()};
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), run).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline std::size_t selected_k(const fs::path& run) {
  return detail::read_json(run / layout::kRuns / "curves.json").at("used_k").get<std::size_t>();
}

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config) : config_(std::move(config)), run_(config_.out) {}

  const PipelineConfig& config() const noexcept { return config_; }
  const fs::path& run_dir() const noexcept { return run_; }

  // Runs every stage whose inputs changed since the manifest was written.
  RunManifest run_all() {
    validate(config_);
    RunLock lock(run_);
    RunManifest manifest = read_manifest(run_);
    manifest.config = to_json(config_);
    for (const auto& stage : stage_names()) run_stage(stage, manifest, false);
    write_manifest(run_, manifest);
    return manifest;
  }

  // Runs one stage; every upstream stage must be complete and unchanged.
  RunManifest run_one(const std::string& stage) {
    validate(config_);
    require(stage_upstream().contains(stage), "unknown stage '", stage, "'");
    RunLock lock(run_);
    RunManifest manifest = read_manifest(run_);
    manifest.config = to_json(config_);
    for (const auto& up : stage_upstream().at(stage)) {
      auto it = manifest.stages.find(up);
      if (it == manifest.stages.end() || !it->second.complete || !outputs_match(it->second)) {
        throw StageError(stage, "upstream stage '" + up + "' is missing or stale; run it first");
      }
    }
    run_stage(stage, manifest, true);
    write_manifest(run_, manifest);
    return manifest;
  }

 private:
  bool outputs_match(const StageRecord& r) const {
    for (const auto& [rel, hash] : r.outputs) {
      const auto p = run_ / rel;
      if (!fs::exists(p) || sha256_file(p) != hash) return false;
    }
    return true;
  }

  std::string input_hash(const std::string& stage, const RunManifest& m) const {
    Sha256 h;
    h.field(stage).field(kToolVersion);
    const json cfg = to_json(config_);
    auto file = [&](const fs::path& p) { h.field(detail::path_string(p)).field(sha256_file(p)); };
    for (const auto& up : stage_upstream().at(stage)) {
      h.field(up);
      if (auto it = m.stages.find(up); it != m.stages.end()) {
        for (const auto& [rel, hash] : it->second.outputs) h.field(rel).field(hash);
      }
    }
    if (stage == "ingest") {
      h.field(cfg.at("langs").dump());
      for (const auto& [lang, p] : config_.corpus) file(p);
      if (config_.abbreviations) file(*config_.abbreviations);
    } else if (stage == "embed") {
      h.field(cfg.at("embeddings").dump());
      if (config_.embeddings.provider == "file") {
        file(config_.embeddings.matrix);
        file(config_.embeddings.ids);
      }
    } else if (stage == "cluster") {
      h.field(cfg.at("clustering").dump()).field(cfg.at("sankey").dump());
    } else if (stage == "topics") {
      h.field(cfg.at("topics").dump()).field(cfg.at("langs").dump());
      for (const auto& [lang, p] : config_.topics.stopwords) file(p);
      for (const auto& [lang, p] : config_.topics.domain_stopwords) file(p);
      if (config_.topics.labels) file(*config_.topics.labels);
    } else if (stage == "sentiment") {
      for (const auto& [lang, p] : config_.lexicons) file(p);
    } else if (stage == "aggregate") {
      h.field(cfg.at("aggregate").dump());
    } else if (stage == "sankey") {
      h.field(cfg.at("sankey").dump());
    }
    return h.hex();
  }

  void run_stage(const std::string& stage, RunManifest& manifest, bool force) {
    const std::string hash = input_hash(stage, manifest);
    auto& record = manifest.stages[stage];
    if (!force && record.complete && record.input_hash == hash && outputs_match(record)) return;
    record.complete = false;
    std::vector<std::string> outputs;
    try {
      outputs = execute(stage, manifest);
    } catch (const StageError&) {
      write_manifest(run_, manifest);
      throw;
    } catch (const std::exception& e) {
      write_manifest(run_, manifest);
      throw StageError(stage, e.what());
    }
    record.outputs.clear();
    for (const auto& rel : outputs) record.outputs[rel] = sha256_file(run_ / rel);
    record.input_hash = hash;
    record.complete = true;
    manifest.executed.push_back(stage);
    write_manifest(run_, manifest);
  }

  std::vector<std::string> execute(const std::string& stage, RunManifest& manifest) {
    if (stage == "ingest") return do_ingest();
    if (stage == "embed") return do_embed(manifest);
    if (stage == "cluster") return do_cluster();
    if (stage == "topics") return do_topics();
    if (stage == "sentiment") return do_sentiment();
    if (stage == "aggregate") return do_aggregate();
    if (stage == "sankey") return do_sankey();
    fail("unknown stage '", stage, "'");
  }

  std::vector<std::string> do_ingest() {
    corpus::IngestConfig cfg;
    cfg.langs = {config_.langs.begin(), config_.langs.end()};
    if (config_.abbreviations) cfg.rules.extend(detail::read_json(*config_.abbreviations));
    std::vector<fs::path> inputs;
    for (const auto& [lang, p] : config_.corpus) inputs.push_back(p);
    auto corpus = corpus::ingest(inputs, cfg);
    // Issue reports name input files by their config-relative name only.
    for (auto& issue : corpus.issues) issue.file = fs::path(issue.file).filename().string();
    fs::remove_all(run_ / layout::kIngest);
    corpus::write_corpus(run_ / layout::kIngest, corpus);
    return detail::files_under(run_, layout::kIngest);
  }

  std::vector<std::string> do_embed(RunManifest& manifest) {
    const auto store = corpus::read_store(run_ / layout::kIngest / "sentences.jsonl");
    embeddings::EmbeddingMatrix m;
    if (config_.embeddings.provider == "file") {
      const auto all = embeddings::load_embeddings(config_.embeddings.matrix, config_.embeddings.ids,
                                                   config_.embeddings.normalize);
      std::vector<std::string> ids;
      ids.reserve(store.size());
      for (const auto& s : store) {
        require(all.contains(s.sent_id), "no embedding for sentence '", s.sent_id, "'");
        ids.push_back(s.sent_id);
      }
      m = all.select(ids);
    } else {
      embeddings::FetchOptions opts;
      opts.batch_size = config_.embeddings.batch_size;
      opts.encoder_tag = "http:" + config_.embeddings.endpoint;
      if (!config_.langs.empty()) opts.empty_lang = config_.langs.front();
      m = embeddings::fetch_embeddings(config_.embeddings.endpoint, store, opts);
      m.validate();
      if (config_.embeddings.normalize) m.normalize();
    }
    manifest.encoder_tag = m.encoder_tag();
    fs::remove_all(run_ / layout::kEmbeddings);
    fs::create_directories(run_ / layout::kEmbeddings);
    embeddings::write_embeddings(m, run_ / layout::kEmbeddings / "matrix.emb", run_ / layout::kEmbeddings / "ids.txt");
    return detail::files_under(run_, layout::kEmbeddings);
  }

  embeddings::EmbeddingMatrix load_run_embeddings() const {
    return embeddings::load_embeddings(run_ / layout::kEmbeddings / "matrix.emb", run_ / layout::kEmbeddings / "ids.txt",
                                       false);
  }

  std::vector<std::string> do_cluster() {
    const auto X = load_run_embeddings();
    const auto& c = config_.clustering;
    require(c.k_max <= X.size(), "k_max ", c.k_max, " exceeds the number of sentences (", X.size(), ")");
    const auto result = clustering::sweep(X, c.k_min, c.k_max, c.seed, c.kmeans);
    fs::remove_all(run_ / layout::kRuns);
    for (const auto& r : result.runs) clustering::write_run(run_ / layout::run_dir(r.k), r, c.kmeans);
    json curves = clustering::curves_to_json(result, X.size(), X.dim());
    curves["used_k"] = c.k.value_or(result.selected_k);
    curves["seed"] = c.seed;
    detail::write_json(run_ / layout::kRuns / "curves.json", curves);
    return detail::files_under(run_, layout::kRuns);
  }

  topics::TopicOptions topic_options() const {
    topics::TopicOptions o;
    o.top_words = config_.topics.top_words;
    o.top_sentences = config_.topics.top_sentences;
    o.garbage_top_n = config_.topics.garbage_top_n;
    o.garbage_threshold_len = config_.topics.garbage_threshold_len;
    for (const auto& lang : config_.langs) {
      auto t = topics::default_term_options(lang);
      t.min_df = config_.topics.min_df;
      t.stem = config_.topics.stem;
      if (auto it = config_.topics.stopwords.find(lang); it != config_.topics.stopwords.end()) {
        const auto extra = detail::read_word_list(it->second);
        t.stopwords.insert(extra.begin(), extra.end());
      }
      o.term_options[lang] = std::move(t);
      if (auto it = config_.topics.domain_stopwords.find(lang); it != config_.topics.domain_stopwords.end()) {
        o.domain_filters[lang] = detail::read_word_list(it->second);
      }
    }
    return o;
  }

  topics::TopicModel model_for(const std::vector<corpus::Sentence>& store, const embeddings::EmbeddingMatrix& X,
                               const clustering::ClusteringRun& run, bool with_labels) const {
    auto model = topics::build_topic_model(store, X, run, config_.langs, topic_options());
    topics::LabelMap labels;
    if (with_labels && config_.topics.labels) labels = topics::load_label_map(*config_.topics.labels);
    topics::apply_labels(model, labels);
    return model;
  }

  std::vector<std::string> do_topics() {
    const auto store = corpus::read_store(run_ / layout::kIngest / "sentences.jsonl");
    const auto X = load_run_embeddings();
    const auto run = clustering::read_run(run_ / layout::run_dir(selected_k(run_)));
    const auto model = model_for(store, X, run, true);
    fs::remove_all(run_ / layout::kTopics);
    topics::write_topic_reports(run_ / layout::kTopics, model);
    return detail::files_under(run_, layout::kTopics);
  }

  std::vector<std::string> do_sentiment() {
    const auto store = corpus::read_store(run_ / layout::kIngest / "sentences.jsonl");
    sentiment::LexiconSet lexicons;
    for (const auto& [lang, p] : config_.lexicons) {
      auto lex = sentiment::load_lexicon(p);
      require(lex.lang == lang, "lexicon ", p.string(), " declares lang '", lex.lang, "', configured for '", lang, "'");
      lexicons.emplace(lang, std::move(lex));
    }
    const auto scores = sentiment::score_corpus(store, lexicons);
    fs::create_directories(run_ / layout::kSentiment);
    sentiment::write_scores(run_ / layout::kSentiment / "scores.jsonl", scores);
    return detail::files_under(run_, layout::kSentiment);
  }

  std::vector<std::string> do_aggregate() {
    const auto docs = corpus::read_documents(run_ / layout::kIngest / "documents.jsonl");
    const auto store = corpus::read_store(run_ / layout::kIngest / "sentences.jsonl");
    const auto run = clustering::read_run(run_ / layout::run_dir(selected_k(run_)));
    const auto model = topics::topic_model_from_json(detail::read_json(run_ / layout::kTopics / "topics.json"));
    const auto scores = sentiment::read_scores(run_ / layout::kSentiment / "scores.jsonl");
    const auto scopes = analytics::build_scopes(docs, config_.article_scopes, config_.comment_scopes);
    const auto agg = analytics::aggregate(scopes, store, run, model, scores);
    for (const auto& rel : {"distributions.json", "distributions.csv", "summaries.json", "summaries.csv"}) {
      fs::remove(run_ / layout::kReports / rel);
    }
    analytics::write_aggregate(run_ / layout::kReports, agg);
    return {(layout::kReports / "distributions.json").generic_string(),
            (layout::kReports / "distributions.csv").generic_string(),
            (layout::kReports / "summaries.json").generic_string(),
            (layout::kReports / "summaries.csv").generic_string()};
  }

  std::vector<std::string> do_sankey() {
    const auto rel = (layout::kReports / "sankey.json").generic_string();
    std::vector<std::size_t> ladder = config_.sankey;
    std::sort(ladder.begin(), ladder.end());
    ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
    fs::create_directories(run_ / layout::kReports);
    if (ladder.size() < 2) {
      detail::write_json(run_ / rel, {{"nodes", json::array()}, {"links", json::array()}, {"dropped", json::array()}});
      return {rel};
    }
    const auto store = corpus::read_store(run_ / layout::kIngest / "sentences.jsonl");
    const auto X = load_run_embeddings();
    const std::size_t used = selected_k(run_);
    const auto selected = topics::topic_model_from_json(detail::read_json(run_ / layout::kTopics / "topics.json"));
    std::vector<clustering::ClusteringRun> runs;
    std::map<std::size_t, topics::TopicModel> models;
    for (auto k : ladder) {
      runs.push_back(clustering::read_run(run_ / layout::run_dir(k)));
      // Ladder runs other than the labelled one get auto labels and garbage flags.
      models.emplace(k, k == used ? selected : model_for(store, X, runs.back(), false));
    }
    std::vector<const clustering::ClusteringRun*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    const json sankey = analytics::sankey_json(ptrs, [&](std::size_t k, std::uint32_t c) {
      const auto& m = models.at(k);
      return analytics::SankeyNode{k, c, m.label_of(c), m.clusters.at(c).garbage};
    });
    detail::write_json(run_ / rel, sankey);
    return {rel};
  }

  PipelineConfig config_;
  fs::path run_;
};

inline RunManifest run_pipeline(const PipelineConfig& config) { return Pipeline(config).run_all(); }

}  // namespace xlom::pipeline
