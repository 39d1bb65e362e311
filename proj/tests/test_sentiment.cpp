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

#include <random>

#include "xlom/sentiment.hpp"

using namespace xlom;
using namespace xlom::sentiment;
using corpus::Sentence;

namespace {

SentimentLexicon lexicon(const std::string& text) { return parse_lexicon(json::parse(text)); }

Sentence sentence(const std::string& text, const std::string& lang = "en", const std::string& id = "d:0000") {
  return {id, "d", lang, text, unicode::scalar_count(text)};
}

}  // namespace

TEST(Polarity, SingleHit) {
  const auto lex = lexicon(R"({"lang": "en", "entries": {"great": 0.8}})");
  const auto s = polarity(sentence("This is great"), lex);
  EXPECT_DOUBLE_EQ(s.polarity, 0.8);
  EXPECT_EQ(s.matched, 1u);
  EXPECT_FALSE(s.filtered);
}

TEST(Polarity, Negation) {
  const auto lex = lexicon(R"({"lang": "en", "entries": {"great": 0.8}, "negators": ["not"]})");
  EXPECT_DOUBLE_EQ(polarity(sentence("This is not great"), lex).polarity, 0.8 * -0.5);
}

TEST(Polarity, NoHitIsFiltered) {
  const auto lex = lexicon(R"({"lang": "de", "entries": {}})");
  const auto s = polarity(sentence("Zitat von muehle79", "de"), lex);
  EXPECT_EQ(s.polarity, 0.0);
  EXPECT_EQ(s.matched, 0u);
  EXPECT_TRUE(s.filtered);
}

TEST(Polarity, NegationWindow) {
  const auto lex = lexicon(R"({"lang": "en", "entries": {"good": 0.6}, "negators": ["not"], "window": 3})");
  EXPECT_DOUBLE_EQ(polarity(sentence("not very very good"), lex).polarity, -0.3);   // negator 3 tokens back
  EXPECT_DOUBLE_EQ(polarity(sentence("not very very very good"), lex).polarity, 0.6);  // 4 tokens back
}

TEST(Polarity, MeanClampAndFolding) {
  const auto lex = lexicon(R"({"lang": "de", "entries": {"Größe": 1.0, "übel": -0.2}, "negators": ["nicht"]})");
  EXPECT_DOUBLE_EQ(polarity(sentence("GROESSE egal, GRÖSSE und übel", "de"), lex).polarity, (1.0 - 0.2) / 2.0);
  EXPECT_THROW(lexicon(R"({"lang": "en", "entries": {"x": 1.5}})"), Error);
  EXPECT_THROW(polarity(sentence("This is great", "de"), lexicon(R"({"lang": "en", "entries": {}})")), Error);
}

TEST(Polarity, FuzzStaysInRange) {
  const auto lex = lexicon(
      R"({"lang": "en", "entries": {"a1": 1.0, "b2": -1.0, "c3": 0.5, "d4": -0.25}, "negators": ["no", "not"]})");
  const std::vector<std::string> words = {"a1", "b2", "c3", "d4", "no", "not", "xx", "yy"};
  std::mt19937_64 gen(1);
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    for (std::size_t w = 0, n = gen() % 12; w < n; ++w) text += words[gen() % words.size()] + " ";
    const auto s = polarity(sentence(text), lex);
    EXPECT_GE(s.polarity, -1.0);
    EXPECT_LE(s.polarity, 1.0);
    EXPECT_EQ(s.filtered, s.polarity == 0.0);
  }
}

TEST(ScoreCorpus, MatchesPerSentenceOracle) {
  LexiconSet set;
  set.emplace("en", lexicon(R"({"lang": "en", "entries": {"good": 0.6, "bad": -0.6}, "negators": ["not"]})"));
  set.emplace("de", lexicon(R"({"lang": "de", "entries": {"gut": 0.6}, "negators": ["nicht"]})"));
  const std::vector<Sentence> store = {sentence("The milk is not good at all", "en", "b:0001"),
                                       sentence("Der Käse ist gut und gut", "de", "a:0000"),
                                       sentence("Good and bad in equal parts", "en", "b:0000")};
  const auto scores = score_corpus(store, set);
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_EQ(scores[0].sent_id, "a:0000");
  EXPECT_DOUBLE_EQ(scores[0].polarity, 0.6);
  EXPECT_EQ(scores[0].matched, 2u);
  EXPECT_EQ(scores[1].sent_id, "b:0000");
  EXPECT_DOUBLE_EQ(scores[1].polarity, 0.0);
  EXPECT_TRUE(scores[1].filtered);
  EXPECT_DOUBLE_EQ(scores[2].polarity, -0.3);
  EXPECT_TRUE(score_corpus({}, set).empty());
}

TEST(ScoreCorpus, MissingLexiconFailsBeforeScoring) {
  LexiconSet set;
  set.emplace("en", lexicon(R"({"lang": "en", "entries": {}})"));
  EXPECT_THROW(score_corpus({sentence("Ein deutscher Satz hier", "de")}, set), Error);
}
