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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"
#include "xlom/rng.hpp"

namespace xlom::fixture {

using json = nlohmann::json;

struct FixtureSpec {
  std::size_t n_topics = 5;
  std::size_t n_per_topic = 40;  // per language
  std::vector<std::string> langs = {"en", "de"};
  std::size_t dim = 16;
  double noise = 0.05;
  std::uint64_t seed = 7;
};

struct PlantedSentence {
  std::string sent_id;
  std::string lang;
  std::size_t topic = 0;
  std::size_t pair = 0;  // (topic, pair) identifies translations across languages
};

struct Fixture {
  std::vector<corpus::RawDocument> documents;
  embeddings::EmbeddingMatrix embeddings;
  std::vector<PlantedSentence> truth;  // one entry per embedding row, same order
  std::size_t short_sentences = 0;     // inserted below the length cutoff
};

namespace detail {

// Topic vocabularies, folded-friendly surface forms.
inline const std::vector<std::vector<std::string>>& topic_words(const std::string& lang) {
  static const std::vector<std::vector<std::string>> en = {
      {"pesticide", "soil", "crop", "garden", "herbicide", "fertilizer", "plant", "weed", "compost", "field"},
      {"store", "supermarket", "shop", "grocery", "discount", "retailer", "shelf", "checkout", "aisle", "chain"},
      {"gmo", "label", "monsanto", "certificate", "usda", "genetic", "seed", "patent", "modified", "standard"},
      {"taste", "milk", "sugar", "flavor", "fruit", "potato", "cheese", "recipe", "tomato", "bread"},
      {"chemical", "cancer", "toxin", "acid", "glyphosate", "disease", "poison", "residue", "dioxin", "risk"},
      {"science", "study", "research", "scientist", "journal", "evidence", "experiment", "data", "analysis", "paper"},
      {"diet", "nutrition", "obesity", "calorie", "vitamin", "fat", "protein", "meal", "health", "fiber"},
      {"meat", "chicken", "cow", "beef", "egg", "pig", "cattle", "poultry", "farmyard", "grass"}};
  static const std::vector<std::vector<std::string>> de = {
      {"Pflanze", "Pestizid", "Dünger", "Boden", "Gülle", "Garten", "Anbau", "Unkraut", "Kompost", "Feld"},
      {"Supermarkt", "Laden", "Discounter", "Einkauf", "Wochenmarkt", "Regal", "Kasse", "Filiale", "Händler", "Kette"},
      {"Gentechnik", "Siegel", "Monsanto", "Zertifikat", "Kennzeichnung", "Saatgut", "Patent", "Norm", "Prüfung", "Etikett"},
      {"Käse", "Milch", "Zucker", "Geschmack", "Frucht", "Kartoffel", "Rezept", "Tomate", "Brot", "Gurke"},
      {"Chemikalie", "Krebs", "Gift", "Säure", "Glyphosat", "Krankheit", "Rückstand", "Dioxin", "Risiko", "Grenzwert"},
      {"Wissenschaft", "Studie", "Forschung", "Forscher", "Zeitschrift", "Beweis", "Experiment", "Daten", "Analyse", "Labor"},
      {"Ernährung", "Diät", "Übergewicht", "Kalorie", "Vitamin", "Fett", "Eiweiß", "Mahlzeit", "Gesundheit", "Ballaststoff"},
      {"Fleisch", "Huhn", "Kuh", "Rind", "Schwein", "Stall", "Geflügel", "Futter", "Weide", "Metzger"}};
  if (lang == "en") return en;
  if (lang == "de") return de;
  static const std::vector<std::vector<std::string>> none;
  return none;
}

inline std::string word_for(const std::string& lang, std::size_t topic, std::size_t j) {
  const auto& table = topic_words(lang);
  if (topic < table.size()) return table[topic][j % table[topic].size()];
  return lang + "topic" + std::to_string(topic) + "word" + std::to_string(j % 10);
}

struct Phrasing {
  std::vector<std::string> sentiment;  // may be empty (no lexicon hit)
  std::vector<std::string> shorts;     // below the 15-character cutoff
};

inline const Phrasing& phrasing(const std::string& lang) {
  static const Phrasing en{{"great", "good", "bad", "terrible", "not good", "excellent", "awful", "", ""},
                           {"Thanks!", "Agreed.", "Great post!"}};
  static const Phrasing de{{"toll", "gut", "schlecht", "furchtbar", "nicht gut", "super", "schrecklich", "", ""},
                           {"Danke!", "Genau.", "Stimmt!"}};
  static const Phrasing other{{"", ""}, {"Ok!"}};
  if (lang == "en") return en;
  if (lang == "de") return de;
  return other;
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string make_sentence(const std::string& lang, std::size_t topic, SplitMix64& rng) {
  const auto w = [&] { return word_for(lang, topic, rng.below(10)); };
  const auto& sentiments = phrasing(lang).sentiment;
  const std::string mood = sentiments[rng.below(sentiments.size())];
  const std::string a = w(), b = w(), c = w();
  if (lang == "de") {
    if (mood.empty()) return "Beim Thema " + a + " geht es um " + b + " und " + c + " im Bioladen.";
    return "Die Sache mit " + a + " und " + b + " ist " + mood + " für " + c + " im Bioladen.";
  }
  if (lang == "en") {
    if (mood.empty()) return capitalize(a) + " and " + b + " matter for the organic " + c + " debate.";
    return "The " + a + " and " + b + " story is " + mood + " for organic " + c + " buyers.";
  }
  return capitalize(a) + " " + b + " " + c + " " + mood + " " + lang + " text.";
}

}  // namespace detail

// Planted-topic corpus with matching embeddings. Per language, the sentences
// are shuffled and laid out as article (4 sentences) + 2 comments (3 each),
// with a short sentence occasionally prepended to a comment.
inline Fixture make_fixture(const FixtureSpec& spec) {
  require(spec.n_topics > 0 && spec.n_per_topic > 0 && !spec.langs.empty() && spec.dim > 0,
          "fixture: all counts must be positive");
  require(spec.noise >= 0.0, "fixture: noise must be non-negative");
  SplitMix64 rng(spec.seed);

  std::vector<std::vector<double>> centroids(spec.n_topics, std::vector<double>(spec.dim));
  for (auto& c : centroids) {
    double sq = 0.0;
    for (auto& v : c) {
      v = rng.normal();
      sq += v * v;
    }
    for (auto& v : c) v /= std::sqrt(sq);
  }

  struct Item {
    std::string text;
    std::size_t topic;
    std::size_t pair;
    std::vector<float> vec;
  };

  Fixture fx;
  fx.embeddings = embeddings::EmbeddingMatrix(spec.dim, "fixture-seed-" + std::to_string(spec.seed));
  for (const auto& lang : spec.langs) {
    std::vector<Item> items;
    for (std::size_t t = 0; t < spec.n_topics; ++t) {
      for (std::size_t i = 0; i < spec.n_per_topic; ++i) {
        Item item{detail::make_sentence(lang, t, rng), t, i, std::vector<float>(spec.dim)};
        double sq = 0.0;
        std::vector<double> v(spec.dim);
        for (std::size_t d = 0; d < spec.dim; ++d) {
          v[d] = centroids[t][d] + spec.noise * rng.normal();
          sq += v[d] * v[d];
        }
        for (std::size_t d = 0; d < spec.dim; ++d) item.vec[d] = static_cast<float>(v[d] / std::sqrt(sq));
        items.push_back(std::move(item));
      }
    }
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);

    std::size_t next = 0;
    std::size_t article_no = 0;
    const auto& shorts = detail::phrasing(lang).shorts;
    while (next < items.size()) {
      const std::string article_id = lang + "-a" + std::to_string(1000 + article_no);
      const std::string date = "2020-01-" + std::string(article_no % 28 < 9 ? "0" : "") + std::to_string(article_no % 28 + 1);
      auto emit_doc = [&](const std::string& doc_id, corpus::DocKind kind, std::size_t count, bool with_short) {
        corpus::RawDocument doc;
        doc.doc_id = doc_id;
        doc.source = lang == "de" ? "fixture-de" : "fixture-" + lang;
        doc.lang = lang;
        doc.kind = kind;
        if (kind == corpus::DocKind::comment) doc.parent_id = article_id;
        doc.created_at = date;
        if (kind == corpus::DocKind::article) doc.title = "Fixture article " + std::to_string(article_no);
        std::size_t ordinal = 0;
        if (with_short) {
          doc.body = shorts[rng.below(shorts.size())];
          ++ordinal;
          ++fx.short_sentences;
        }
        for (std::size_t s = 0; s < count && next < items.size(); ++s, ++next, ++ordinal) {
          auto& item = items[next];
          if (!doc.body.empty()) doc.body += ' ';
          doc.body += item.text;
          const std::string id = corpus::make_sent_id(doc_id, ordinal);
          fx.embeddings.append(id, item.vec);
          fx.truth.push_back({id, lang, item.topic, item.pair});
        }
        fx.documents.push_back(std::move(doc));
      };
      emit_doc(article_id, corpus::DocKind::article, 4, false);
      for (std::size_t c = 0; c < 2 && next < items.size(); ++c) {
        emit_doc(article_id + "-c" + std::to_string(c), corpus::DocKind::comment, 3, rng.below(4) == 0);
      }
      ++article_no;
    }
  }
  // Rows in sentence-store order: by doc_id, then ordinal.
  std::vector<std::size_t> order(fx.truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    const auto& id = fx.truth[i].sent_id;
    const auto colon = id.rfind(':');
    return std::pair(id.substr(0, colon), id.substr(colon + 1));
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<PlantedSentence> truth;
  std::vector<std::string> ids;
  for (auto i : order) {
    truth.push_back(fx.truth[i]);
    ids.push_back(fx.truth[i].sent_id);
  }
  fx.embeddings = fx.embeddings.select(ids);
  fx.embeddings.set_normalized(true);
  fx.truth = std::move(truth);
  return fx;
}

// Fraction of points whose cluster's majority planted topic is their own.
template <typename Truth, typename Labels>
double purity(const Truth& truth, const Labels& labels) {
  require(truth.size() == labels.size() && !truth.empty(), "purity: size mismatch");
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < truth.size(); ++i) ++table[labels[i]][truth[i]];
  std::size_t hit = 0;
  for (const auto& [_, counts] : table) {
    std::size_t best = 0;
    for (const auto& [__, n] : counts) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// corpus_<lang>.jsonl, embeddings.emb, embeddings.ids, truth.jsonl
inline void write_fixture(const std::filesystem::path& dir, const Fixture& fx) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<corpus::RawDocument>> by_lang;
  for (const auto& d : fx.documents) by_lang[d.lang].push_back(d);
  for (const auto& [lang, docs] : by_lang) {
    corpus::write_jsonl(dir / ("corpus_" + lang + ".jsonl"), docs, [](const corpus::RawDocument& d) { return corpus::to_json(d); });
  }
  embeddings::write_embeddings(fx.embeddings, dir / "embeddings.emb", dir / "embeddings.ids");
  corpus::write_jsonl(dir / "truth.jsonl", fx.truth, [](const PlantedSentence& p) {
    return json{{"sent_id", p.sent_id}, {"lang", p.lang}, {"topic", p.topic}, {"pair", p.pair}};
  });
}

}  // namespace xlom::fixture
