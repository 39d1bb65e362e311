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
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xlom/corpus.hpp"
#include "xlom/error.hpp"
#include "xlom/unicode.hpp"

namespace xlom::sentiment {

using corpus::Sentence;
using json = nlohmann::json;

struct SentimentLexicon {
  std::string lang;
  std::unordered_map<std::string, double> entries;  // folded token -> polarity in [-1, 1]
  std::set<std::string> negators;                   // folded
  double negation_factor = -0.5;
  std::size_t window = 3;

  void validate() const {
    for (const auto& [token, polarity] : entries) {
      require(polarity >= -1.0 && polarity <= 1.0, "lexicon '", lang, "': polarity of '", token, "' is ", polarity,
              ", outside [-1, 1]");
    }
    require(negation_factor >= -1.0 && negation_factor < 0.0, "lexicon '", lang, "': negation_factor ",
            negation_factor, " outside [-1, 0)");
  }
};

// {"lang": str, "entries": {token: float}, "negators": [str],
//  "negation_factor": float, "window": int}
inline SentimentLexicon parse_lexicon(const json& j) {
  require(j.is_object(), "lexicon must be a JSON object");
  SentimentLexicon lex;
  lex.lang = j.at("lang").get<std::string>();
  for (const auto& [token, polarity] : j.at("entries").items()) {
    require(polarity.is_number(), "lexicon '", lex.lang, "': polarity of '", token, "' is not a number");
    lex.entries[unicode::fold(token)] = polarity.get<double>();
  }
  for (const auto& n : j.value("negators", json::array())) lex.negators.insert(unicode::fold(n.get<std::string>()));
  lex.negation_factor = j.value("negation_factor", -0.5);
  const auto window = j.value("window", 3LL);
  require(window >= 0, "lexicon '", lex.lang, "': window must be non-negative");
  lex.window = static_cast<std::size_t>(window);
  lex.validate();
  return lex;
}

inline SentimentLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open lexicon ", path.string());
  try {
    return parse_lexicon(json::parse(in));
  } catch (const json::exception& e) {
    fail("lexicon ", path.string(), ": ", e.what());
  }
}

struct SentimentScore {
  std::string sent_id;
  double polarity = 0.0;
  std::size_t matched = 0;
  bool filtered = true;  // polarity == 0
};

// Mean of per-hit contributions, each multiplied by negation_factor when a
// negator sits within the preceding `window` tokens; clamped to [-1, 1].
inline SentimentScore polarity(const Sentence& sentence, const SentimentLexicon& lex) {
  require(sentence.lang == lex.lang, "sentence '", sentence.sent_id, "' is '", sentence.lang, "', lexicon is '",
          lex.lang, "'");
  const auto tokens = unicode::word_tokens(sentence.text);
  SentimentScore score;
  score.sent_id = sentence.sent_id;
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = lex.entries.find(tokens[i]);
    if (it == lex.entries.end()) continue;
    double contribution = it->second;
    const std::size_t from = i >= lex.window ? i - lex.window : 0;
    for (std::size_t j = from; j < i; ++j) {
      if (lex.negators.contains(tokens[j])) {
        contribution *= lex.negation_factor;
        break;
      }
    }
    sum += contribution;
    ++score.matched;
  }
  if (score.matched > 0) score.polarity = std::clamp(sum / static_cast<double>(score.matched), -1.0, 1.0);
  score.filtered = score.polarity == 0.0;
  return score;
}

using LexiconSet = std::map<std::string, SentimentLexicon>;

// One score per sentence, ordered by sent_id. Every language in the store
// must have a lexicon; this is checked before any scoring.
inline std::vector<SentimentScore> score_corpus(const std::vector<Sentence>& store, const LexiconSet& lexicons) {
  std::set<std::string> missing;
  for (const auto& s : store) {
    if (!lexicons.contains(s.lang)) missing.insert(s.lang);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& l : missing) list += (list.empty() ? "" : ", ") + l;
    fail("no sentiment lexicon for language(s): ", list);
  }
  std::vector<SentimentScore> out;
  out.reserve(store.size());
  for (const auto& s : store) out.push_back(polarity(s, lexicons.at(s.lang)));
  std::sort(out.begin(), out.end(), [](const SentimentScore& a, const SentimentScore& b) { return a.sent_id < b.sent_id; });
  return out;
}

inline json to_json(const SentimentScore& s) {
  return {{"sent_id", s.sent_id}, {"polarity", s.polarity}, {"matched", s.matched}, {"filtered", s.filtered}};
}

inline void write_scores(const std::filesystem::path& path, const std::vector<SentimentScore>& scores) {
  corpus::write_jsonl(path, scores, [](const SentimentScore& s) { return to_json(s); });
}

inline std::vector<SentimentScore> read_scores(const std::filesystem::path& path) {
  std::vector<SentimentScore> out;
  corpus::read_jsonl(path, [&](const json& j) {
    out.push_back({j.at("sent_id").get<std::string>(), j.at("polarity").get<double>(), j.at("matched").get<std::size_t>(),
                   j.at("filtered").get<bool>()});
  });
  return out;
}

}  // namespace xlom::sentiment
