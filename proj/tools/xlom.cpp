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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xlom/fixture.hpp"
#include "xlom/pipeline.hpp"

namespace fs = std::filesystem;
using namespace xlom;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::pair<std::string, fs::path> lang_path(const std::string& s) {
  const auto eq = s.find('=');
  require(eq != std::string::npos && eq > 0, "expected lang=path, got '", s, "'");
  return {s.substr(0, eq), fs::absolute(s.substr(eq + 1))};
}

// Command-line values that override the config file.
struct Overrides {
  std::string config;
  std::string out;
  std::vector<std::string> inputs;
  std::string langs;
  std::string provider;
  std::string matrix;
  std::string ids;
  std::string endpoint;
  std::optional<std::size_t> k;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_words;
  std::optional<std::size_t> top_sentences;
  std::string labels;
  std::vector<std::string> domain_stopwords;
  std::vector<std::string> lexicons;
  std::string scopes;
  std::string runs;
};

pipeline::PipelineConfig build_config(const Overrides& o) {
  pipeline::PipelineConfig c = pipeline::load_config(o.config);
  if (!o.out.empty()) c.out = fs::absolute(o.out);
  if (!o.langs.empty()) c.langs = split_list(o.langs);
  if (!o.inputs.empty()) {
    c.corpus.clear();
    for (const auto& in : o.inputs) c.corpus[fs::path(in).stem().string()] = fs::absolute(in);
  }
  if (!o.provider.empty()) c.embeddings.provider = o.provider;
  if (!o.matrix.empty()) c.embeddings.matrix = fs::absolute(o.matrix);
  if (!o.ids.empty()) c.embeddings.ids = fs::absolute(o.ids);
  if (!o.endpoint.empty()) c.embeddings.endpoint = o.endpoint;
  if (o.k) c.clustering.k = o.k;
  if (o.k_min) c.clustering.k_min = *o.k_min;
  if (o.k_max) c.clustering.k_max = *o.k_max;
  if (o.seed) c.clustering.seed = *o.seed;
  if (o.top_words) c.topics.top_words = *o.top_words;
  if (o.top_sentences) c.topics.top_sentences = *o.top_sentences;
  if (!o.labels.empty()) c.topics.labels = fs::absolute(o.labels);
  for (const auto& s : o.domain_stopwords) c.topics.domain_stopwords.insert_or_assign(lang_path(s).first, lang_path(s).second);
  for (const auto& s : o.lexicons) c.lexicons.insert_or_assign(lang_path(s).first, lang_path(s).second);
  if (!o.scopes.empty()) {
    const auto scopes = split_list(o.scopes);
    c.article_scopes = std::find(scopes.begin(), scopes.end(), "article") != scopes.end();
    c.comment_scopes = std::find(scopes.begin(), scopes.end(), "comments") != scopes.end();
  }
  if (!o.runs.empty()) {
    c.sankey.clear();
    for (auto r : split_list(o.runs)) {
      if (!r.empty() && r[0] == 'k') r.erase(0, 1);
      c.sankey.push_back(std::stoul(r));
    }
  }
  return c;
}

void report(const pipeline::RunManifest& m) {
  if (m.executed.empty()) {
    std::cout << "all stages up to date\n";
    return;
  }
  for (const auto& s : m.executed) std::cout << "ran " << s << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual opinion mining pipeline"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "run directory (overrides config)");
  };

  std::map<CLI::App*, std::string> stage_of;
  auto* ingest = app.add_subcommand("ingest", "split documents into the sentence store");
  common(ingest);
  ingest->add_option("--input", o.inputs, "corpus JSONL file(s), named <lang>.jsonl");
  ingest->add_option("--langs", o.langs, "comma-separated language codes");
  stage_of[ingest] = "ingest";

  auto* embed = app.add_subcommand("embed", "load or fetch sentence embeddings");
  common(embed);
  embed->add_option("--provider", o.provider, "file or http")->check(CLI::IsMember({"file", "http"}));
  embed->add_option("--matrix", o.matrix, "EMB1 matrix file");
  embed->add_option("--ids", o.ids, "sentence id sidecar");
  embed->add_option("--endpoint", o.endpoint, "embedding service base URL");
  stage_of[embed] = "embed";

  auto* cluster = app.add_subcommand("cluster", "cluster at a fixed k");
  common(cluster);
  cluster->add_option("--k", o.k, "number of clusters");
  cluster->add_option("--seed", o.seed, "base seed; restart r uses seed + r");
  stage_of[cluster] = "cluster";

  auto* sweep = app.add_subcommand("sweep", "K-means sweep with AIC selection");
  common(sweep);
  sweep->add_option("--k-min", o.k_min, "smallest k in the sweep");
  sweep->add_option("--k-max", o.k_max, "largest k in the sweep");
  sweep->add_option("--seed", o.seed, "base seed; restart r uses seed + r");
  stage_of[sweep] = "cluster";

  auto* topics = app.add_subcommand("topics", "top words and sentences per cluster");
  common(topics);
  topics->add_option("--top-words", o.top_words, "words per cluster and language");
  topics->add_option("--top-sentences", o.top_sentences, "sentences per cluster and language");
  topics->add_option("--labels", o.labels, "label map (JSON)");
  topics->add_option("--domain-stopwords", o.domain_stopwords, "lang=path");
  stage_of[topics] = "topics";

  auto* sentiment = app.add_subcommand("sentiment", "lexicon polarity per sentence");
  common(sentiment);
  sentiment->add_option("--lexicon", o.lexicons, "lang=path");
  stage_of[sentiment] = "sentiment";

  auto* aggregate = app.add_subcommand("aggregate", "topic distributions and sentiment summaries");
  common(aggregate);
  aggregate->add_option("--scopes", o.scopes, "article,comments");
  stage_of[aggregate] = "aggregate";

  auto* sankey = app.add_subcommand("sankey", "cluster flows across the k ladder");
  common(sankey);
  sankey->add_option("--runs", o.runs, "e.g. k5,k10,k15,k20");
  stage_of[sankey] = "sankey";

  auto* run = app.add_subcommand("run", "run every stage that is out of date");
  common(run);

  fixture::FixtureSpec spec;
  std::string fixture_out;
  std::string fixture_langs = "en,de";
  auto* fixture = app.add_subcommand("fixture", "generate a planted-topic corpus with embeddings");
  fixture->add_option("--out", fixture_out, "output directory")->required();
  fixture->add_option("--n-topics", spec.n_topics, "planted topics")->check(CLI::PositiveNumber);
  fixture->add_option("--n-per-topic", spec.n_per_topic, "sentences per topic and language")->check(CLI::PositiveNumber);
  fixture->add_option("--langs", fixture_langs, "comma-separated language codes");
  fixture->add_option("--dim", spec.dim, "embedding dimension")->check(CLI::PositiveNumber);
  fixture->add_option("--noise", spec.noise, "Gaussian noise scale around topic centroids")->check(CLI::NonNegativeNumber);
  fixture->add_option("--seed", spec.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    if (fixture->parsed()) {
      stage = "fixture";
      spec.langs = split_list(fixture_langs);
      const auto fx = fixture::make_fixture(spec);
      fixture::write_fixture(fixture_out, fx);
      std::cout << "wrote " << fx.embeddings.size() << " sentences (" << fx.short_sentences << " short) to "
                << fixture_out << '\n';
      return EXIT_SUCCESS;
    }
    pipeline::Pipeline p(build_config(o));
    if (run->parsed()) {
      stage = "run";
      report(p.run_all());
      return EXIT_SUCCESS;
    }
    for (const auto& [sub, name] : stage_of) {
      if (sub->parsed()) {
        stage = name;
        report(p.run_one(name));
      }
    }
    return EXIT_SUCCESS;
  } catch (const pipeline::StageError& e) {
    std::cerr << "xlom: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "xlom: [" << stage << "] " << e.what() << '\n';
  }
  return EXIT_FAILURE;
}
