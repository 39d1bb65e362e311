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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "xlom/topics.hpp"

using namespace xlom;
using namespace xlom::topics;
using clustering::ClusteringRun;
using corpus::Sentence;
using embeddings::EmbeddingMatrix;

namespace {

Sentence sentence(const std::string& id, const std::string& text, const std::string& lang = "en") {
  return {id, id.substr(0, id.find(':')), lang, text, unicode::scalar_count(text)};
}

TermOptions plain(std::size_t min_df = 1) {
  TermOptions o;
  o.min_df = min_df;
  o.stem = false;
  return o;
}

double mass_of(const TermStats& s, std::size_t c, const std::string& term) {
  return s.cluster_mass[c][*s.term_index(term)];
}

}  // namespace

TEST(TermStats, EqualIdfMasses) {
  // Every term has df = 2, so idf is the same for all of them.
  const std::vector<Sentence> store = {sentence("d:0000", "pesticide soil"), sentence("d:0001", "pesticide crop"),
                                       sentence("d:0002", "soil crop")};
  const Assignments a = {{"d:0000", 0}, {"d:0001", 0}, {"d:0002", 1}};
  const auto s = term_stats(store, a, "en", 2, plain());
  EXPECT_NEAR(mass_of(s, 0, "pesticide"), 0.5, 1e-12);
  EXPECT_NEAR(mass_of(s, 0, "soil"), 0.25, 1e-12);
  EXPECT_NEAR(mass_of(s, 0, "crop"), 0.25, 1e-12);
}

TEST(TermStats, SingleSentenceCluster) {
  const std::vector<Sentence> store = {sentence("d:0000", "organic food"), sentence("d:0001", "food organic")};
  const Assignments a = {{"d:0000", 0}, {"d:0001", 1}};
  const auto s = term_stats(store, a, "en", 2, plain());
  EXPECT_NEAR(mass_of(s, 0, "organic"), 0.5, 1e-12);
  EXPECT_NEAR(mass_of(s, 0, "food"), 0.5, 1e-12);
}

TEST(TermStats, MinDfAndIdfFormula) {
  const std::vector<Sentence> store = {sentence("d:0000", "alpha beta"), sentence("d:0001", "alpha gamma"),
                                       sentence("d:0002", "alpha beta"), sentence("d:0003", "delta")};
  const Assignments a = {{"d:0000", 0}, {"d:0001", 0}, {"d:0002", 1}, {"d:0003", 1}};
  const auto s = term_stats(store, a, "en", 2, plain(2));
  EXPECT_EQ(s.vocab, (std::vector<std::string>{"alpha", "beta"}));
  // cluster 0: alpha tf 2, idf ln(5/4)+1; beta tf 1, idf ln(5/3)+1
  const double wa = 2 * (std::log(5.0 / 4.0) + 1), wb = std::log(5.0 / 3.0) + 1;
  EXPECT_NEAR(mass_of(s, 0, "alpha"), wa / (wa + wb), 1e-12);
}

TEST(TermStats, StopwordsAndStemming) {
  const auto o = default_term_options("en");
  EXPECT_EQ(terms("The farmers were planting crops", "en", o), (std::vector<std::string>{"farmer", "plant", "crop"}));
  EXPECT_EQ(terms("Die Bauern pflanzen Tomaten", "de", default_term_options("de")),
            (std::vector<std::string>{"bau", "pflanz", "tomat"}));
}

TEST(Clarity, HandExample) {
  EXPECT_NEAR(clarity_term(0.5, 1.0 / 3.0), 0.2925, 1e-4);
  EXPECT_EQ(clarity_term(0.0, 0.2), 0.0);
  EXPECT_NEAR(clarity_term(0.3, 0.3), 0.0, 1e-15);
}

TEST(Clarity, ClusterEqualToCorpusScoresZeroAndKlNonNegative) {
  const std::vector<Sentence> store = {sentence("d:0000", "alpha beta"), sentence("d:0001", "alpha beta")};
  const auto s = term_stats(store, {{"d:0000", 0}, {"d:0001", 0}}, "en", 1, plain());
  for (const auto& t : clarity(s, 0)) EXPECT_NEAR(t.score, 0.0, 1e-15);

  std::mt19937_64 gen(99);
  const std::vector<std::string> words = {"apple", "pear", "plum", "kiwi", "lime", "fig", "date", "nut"};
  double worst = 0.0;
  for (int corpus = 0; corpus < 100; ++corpus) {
    const std::size_t k = 1 + gen() % 6;
    std::vector<Sentence> docs;
    Assignments a;
    for (int i = 0; i < 40; ++i) {
      std::string text;
      for (std::size_t w = 0, n = 1 + gen() % 6; w < n; ++w) text += words[gen() % words.size()] + " ";
      docs.push_back(sentence(corpus::make_sent_id("d", i), text));
      a[docs.back().sent_id] = static_cast<std::uint32_t>(gen() % k);
    }
    const auto stats = term_stats(docs, a, "en", k, plain(1 + gen() % 3));
    for (std::size_t c = 0; c < k; ++c) {
      if (stats.scope_empty(c)) continue;
      double kl = 0.0, total = 0.0;
      for (const auto& t : clarity(stats, c)) kl += t.score;
      for (double m : stats.cluster_mass[c]) total += m;
      EXPECT_NEAR(total, 1.0, 1e-9);
      worst = std::min(worst, kl);
    }
  }
  EXPECT_GE(worst, -1e-9);
}

TEST(Clarity, EmptyScopeIsAnError) {
  const std::vector<Sentence> store = {sentence("d:0000", "alpha beta")};
  const auto s = term_stats(store, {{"d:0000", 0}}, "en", 2, plain());
  EXPECT_THROW(clarity(s, 1), EmptyScopeError);
}

TEST(TopWords, FilterAndOverflow) {
  const std::vector<TermScore> ranked = {{"a", 0.9}, {"the", 0.8}, {"b", 0.7}};
  const auto out = top_words(ranked, 10, {"the"});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].term, "a");
  EXPECT_EQ(out[1].term, "b");
  EXPECT_EQ(top_words(ranked, 10).size(), 3u);
  EXPECT_EQ(normalize_filter({"Farmers"}, "en", true), (std::set<std::string>{"farmer", "farmers"}));
}

namespace {

// Cluster 0 centroid is e0; sentence i has cosine cos_i to it.
struct Fixture {
  EmbeddingMatrix X{2};
  ClusteringRun run;
  std::vector<Sentence> store;
};

Fixture cosine_fixture(const std::vector<double>& cosines) {
  Fixture f;
  f.run.k = 1;
  f.run.dim = 2;
  f.run.centroids = {1.0, 0.0};
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    const std::string id = corpus::make_sent_id("d", i);
    const double c = cosines[i];
    f.X.append(id, std::vector<float>{static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))});
    f.run.ids.push_back(id);
    f.run.assignments.push_back(0);
    f.store.push_back(sentence(id, "some sentence text " + std::to_string(i)));
  }
  return f;
}

}  // namespace

TEST(TopSentences, OrderedByCosine) {
  const auto f = cosine_fixture({0.6, 0.9, 0.5, 0.7, 0.8});
  const auto top = top_sentences(f.X, f.run, index_sentences(f.store), 0, std::nullopt, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].sent_id, "d:0001");
  EXPECT_EQ(top[1].sent_id, "d:0004");
  EXPECT_EQ(top[2].sent_id, "d:0003");
  EXPECT_NEAR(top[0].cosine, 0.9, 1e-6);

  const auto exact = cosine_fixture({1.0, 0.2});
  EXPECT_NEAR(top_sentences(exact.X, exact.run, index_sentences(exact.store), 0, std::nullopt, 1)[0].cosine, 1.0, 1e-7);
}

TEST(TopSentences, MatchesLinearScanOracle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> cos(60);
  for (auto& c : cos) c = u(gen);
  const auto f = cosine_fixture(cos);
  std::vector<std::pair<double, std::string>> oracle;
  for (std::size_t i = 0; i < cos.size(); ++i) {
    const auto r = f.X.row(i);
    oracle.push_back({-(r[0] / std::hypot(r[0], r[1])), f.run.ids[i]});
  }
  std::sort(oracle.begin(), oracle.end());
  const auto top = top_sentences(f.X, f.run, index_sentences(f.store), 0, std::nullopt, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(top[i].sent_id, oracle[i].second);
}

namespace {

TopicModel two_cluster_model() {
  TopicModel m;
  m.k = 2;
  for (std::size_t c = 0; c < 2; ++c) {
    ClusterTopic t;
    t.index = c;
    m.clusters.push_back(t);
  }
  m.clusters[0].mean_top_sentence_len = 17;
  m.clusters[1].mean_top_sentence_len = 80;
  flag_garbage(m, 25);
  return m;
}

}  // namespace

TEST(Garbage, ThresholdAndOverride) {
  auto m = two_cluster_model();
  EXPECT_TRUE(m.clusters[0].garbage);
  EXPECT_FALSE(m.clusters[1].garbage);
  apply_labels(m, parse_label_map(json::parse(R"({"0": {"garbage": false}})")));
  EXPECT_FALSE(m.clusters[0].garbage);
  EXPECT_TRUE(m.clusters[0].garbage_auto);
}

TEST(Labels, MapDefaultsAndRange) {
  auto m = two_cluster_model();
  apply_labels(m, parse_label_map(json::parse(R"({"1": {"label": "Retailers"}})")));
  EXPECT_EQ(m.label_of(1), "Retailers");
  EXPECT_EQ(m.label_of(0), "garbage-0");

  auto d = two_cluster_model();
  apply_labels(d, {});
  EXPECT_EQ(d.label_of(1), "topic-1");

  auto bad = two_cluster_model();
  EXPECT_THROW(apply_labels(bad, parse_label_map(json::parse(R"({"99": {"label": "x"}})"))), Error);
  EXPECT_THROW(parse_label_map(json::parse(R"({"one": {"label": "x"}})")), Error);
}

TEST(TopicModel, JsonRoundTrip) {
  auto m = two_cluster_model();
  m.langs = {"en"};
  m.clusters[1].top_words["en"] = {{"soil", 0.25}};
  m.clusters[1].top_sentences["en"] = {{"d:0001", 0.75}};
  apply_labels(m, {});
  const auto back = topic_model_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
}
