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

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xlom::text {

// Bundled generic stopwords, already folded (lowercase, no diacritics).
inline const std::set<std::string>& bundled_stopwords(std::string_view lang) {
  static const std::set<std::string> en = {
      "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "aren",
      "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
      "cannot", "could", "couldnt", "did", "didnt", "do", "does", "doesnt", "doing", "dont", "down", "during",
      "each", "even", "ever", "every", "few", "for", "from", "further", "get", "got", "had", "hadnt", "has",
      "hasnt", "have", "havent", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
      "how", "however", "if", "in", "into", "is", "isnt", "it", "its", "itself", "just", "let", "lets", "like",
      "may", "me", "might", "more", "most", "much", "must", "my", "myself", "no", "nor", "not", "now", "of",
      "off", "on", "once", "one", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own",
      "really", "said", "same", "say", "says", "she", "should", "shouldnt", "so", "some", "such", "than",
      "that", "thats", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "us", "very", "was", "wasnt", "we",
      "well", "were", "werent", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
      "with", "without", "won", "would", "wouldnt", "yet", "you", "your", "yours", "yourself", "yourselves"};
  static const std::set<std::string> de = {
      "aber", "alle", "allem", "allen", "aller", "alles", "als", "also", "am", "an", "ander", "andere",
      "anderem", "anderen", "anderer", "anderes", "auch", "auf", "aus", "bei", "bin", "bis", "bist", "da",
      "damit", "dann", "das", "dass", "dein", "deine", "dem", "den", "denn", "der", "des", "dich", "die",
      "dies", "diese", "diesem", "diesen", "dieser", "dieses", "dir", "doch", "dort", "du", "durch", "ein",
      "eine", "einem", "einen", "einer", "eines", "er", "es", "etwas", "euch", "euer", "fur", "gegen",
      "gewesen", "hab", "habe", "haben", "hat", "hatte", "hatten", "hier", "hin", "hinter", "ich", "ihm",
      "ihn", "ihnen", "ihr", "ihre", "ihrem", "ihren", "ihrer", "ihres", "im", "in", "indem", "ins", "ist",
      "ja", "jede", "jedem", "jeden", "jeder", "jedes", "jetzt", "kann", "kein", "keine", "keinem", "keinen",
      "keiner", "konnen", "konnte", "man", "manche", "mehr", "mein", "meine", "mich", "mir", "mit", "muss",
      "nach", "nicht", "nichts", "noch", "nun", "nur", "ob", "oder", "ohne", "schon", "sehr", "sein", "seine",
      "seinem", "seinen", "seiner", "selbst", "sich", "sie", "sind", "so", "solche", "soll", "sollte",
      "sondern", "sonst", "uber", "um", "und", "uns", "unser", "unsere", "unter", "viel", "vom", "von", "vor",
      "war", "waren", "warum", "was", "weil", "welche", "wenn", "wer", "werde", "werden", "wie", "wieder",
      "will", "wir", "wird", "wo", "wollen", "zu", "zum", "zur", "zwar", "zwischen"};
  static const std::set<std::string> none;
  if (lang == "en") return en;
  if (lang == "de") return de;
  return none;
}

// Suffixes tried longest-first; a suffix is stripped only if at least
// kMinStem characters remain.
inline const std::vector<std::string>& stem_suffixes(std::string_view lang) {
  static const std::vector<std::string> en = {"ing", "ed", "s"};
  static const std::vector<std::string> de = {"ern", "en", "er", "es", "e", "s"};
  static const std::vector<std::string> none;
  if (lang == "en") return en;
  if (lang == "de") return de;
  return none;
}

inline constexpr std::size_t kMinStem = 3;

// Light suffix stripping on folded ASCII-ish tokens. English "s" is kept
// after s, u or i ("grass", "virus", "analysis").
inline std::string stem(const std::string& token, std::string_view lang) {
  for (const auto& suffix : stem_suffixes(lang)) {
    if (token.size() < suffix.size() + kMinStem) continue;
    if (token.compare(token.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    if (lang == "en" && suffix == "s") {
      const char before = token[token.size() - 2];
      if (before == 's' || before == 'u' || before == 'i') continue;
    }
    return token.substr(0, token.size() - suffix.size());
  }
  return token;
}

}  // namespace xlom::text
