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
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xlom/error.hpp"
#include "xlom/unicode.hpp"

namespace xlom::corpus {

using json = nlohmann::json;

// Sentences shorter than this many scalar values never survive preprocessing.
inline constexpr std::size_t kMinSentenceChars = 15;

enum class DocKind { article, comment };

inline std::string to_string(DocKind kind) { return kind == DocKind::article ? "article" : "comment"; }

struct RawDocument {
  std::string doc_id;
  std::string source;
  std::string lang;
  DocKind kind = DocKind::article;
  std::optional<std::string> parent_id;
  std::string created_at;
  std::optional<std::string> title;
  std::string body;
};

struct Sentence {
  std::string sent_id;
  std::string doc_id;
  std::string lang;
  std::string text;
  std::size_t char_len = 0;

  bool operator==(const Sentence&) const = default;
};

// Ordinals are zero-padded so lexicographic order of ids follows document order.
inline std::string make_sent_id(std::string_view doc_id, std::size_t ordinal) {
  std::string n = std::to_string(ordinal);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return std::string(doc_id) + ":" + n;
}

// ---------------------------------------------------------------------------
// RawDocument <-> JSON

namespace detail {

inline const std::regex& date_pattern() {
  static const std::regex re(R"(^\d{4}-\d{2}-\d{2}(T\d{2}:\d{2}(:\d{2}(\.\d+)?)?Z?)?$)");
  return re;
}

inline std::string required_string(const json& j, const char* field, const std::string& doc_id) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) throw DocumentError(doc_id, std::string("missing or non-string field '") + field + "'");
  return it->get<std::string>();
}

inline std::optional<std::string> optional_string(const json& j, const char* field, const std::string& doc_id) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DocumentError(doc_id, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

inline RawDocument parse_document(const json& j, const std::set<std::string>& langs) {
  if (!j.is_object()) throw DocumentError("?", "line is not a JSON object");
  std::string id = "?";
  if (auto it = j.find("doc_id"); it != j.end() && it->is_string()) id = it->get<std::string>();
  RawDocument doc;
  doc.doc_id = detail::required_string(j, "doc_id", id);
  if (doc.doc_id.empty()) throw DocumentError(id, "empty doc_id");
  doc.source = detail::required_string(j, "source", id);
  doc.lang = detail::required_string(j, "lang", id);
  if (!langs.empty() && !langs.contains(doc.lang)) throw DocumentError(id, "language '" + doc.lang + "' is not configured");
  const std::string kind = detail::required_string(j, "kind", id);
  if (kind == "article") {
    doc.kind = DocKind::article;
  } else if (kind == "comment") {
    doc.kind = DocKind::comment;
  } else {
    throw DocumentError(id, "kind must be 'article' or 'comment', got '" + kind + "'");
  }
  doc.parent_id = detail::optional_string(j, "parent_id", id);
  if ((doc.kind == DocKind::comment) != doc.parent_id.has_value()) {
    throw DocumentError(id, "parent_id must be set exactly for comments");
  }
  doc.created_at = detail::required_string(j, "created_at", id);
  if (!std::regex_match(doc.created_at, detail::date_pattern())) {
    throw DocumentError(id, "created_at is not a UTC date: '" + doc.created_at + "'");
  }
  doc.title = detail::optional_string(j, "title", id);
  doc.body = detail::required_string(j, "body", id);
  return doc;
}

inline json to_json(const RawDocument& doc, bool with_body = true) {
  json j = {{"doc_id", doc.doc_id},
            {"source", doc.source},
            {"lang", doc.lang},
            {"kind", to_string(doc.kind)},
            {"parent_id", doc.parent_id ? json(*doc.parent_id) : json(nullptr)},
            {"created_at", doc.created_at},
            {"title", doc.title ? json(*doc.title) : json(nullptr)}};
  if (with_body) j["body"] = doc.body;
  return j;
}

inline json to_json(const Sentence& s) {
  return {{"sent_id", s.sent_id}, {"doc_id", s.doc_id}, {"lang", s.lang}, {"text", s.text}, {"char_len", s.char_len}};
}

inline Sentence sentence_from_json(const json& j) {
  Sentence s;
  s.sent_id = j.at("sent_id").get<std::string>();
  s.doc_id = j.at("doc_id").get<std::string>();
  s.lang = j.at("lang").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.char_len = j.at("char_len").get<std::size_t>();
  return s;
}

// ---------------------------------------------------------------------------
// Sentence splitting

struct LanguageRules {
  std::set<std::string> abbreviations;  // lowercase, with trailing period
  bool numeric_ordinals = false;        // "3. Oktober" does not end a sentence
};

struct TokenizerRules {
  std::map<std::string, LanguageRules> languages;

  static TokenizerRules defaults() {
    TokenizerRules rules;
    rules.languages["en"].abbreviations = {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.", "vs.", "etc.", "e.g.", "i.e.",
        "inc.", "ltd.", "co.", "corp.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
        "sept.", "oct.", "nov.", "dec.", "no.", "approx.", "u.s.", "u.k.", "gov.", "sen.", "rep.", "fig."};
    auto& de = rules.languages["de"];
    de.abbreviations = {"dr.", "prof.", "hr.", "fr.", "str.", "nr.", "bzw.", "usw.", "z.b.", "d.h.",
                        "u.a.", "v.a.", "ca.", "evtl.", "ggf.", "inkl.", "zzgl.", "bspw.", "vgl.", "sog.",
                        "mio.", "mrd.", "jh.", "abs.", "s.", "gmbh.", "u.s.w.", "etc."};
    de.numeric_ordinals = true;
    return rules;
  }

  // Merges {"<lang>": {"abbreviations": [...], "numeric_ordinals": bool}} or
  // the short form {"<lang>": [...]} into the current rules.
  void extend(const json& j) {
    require(j.is_object(), "abbreviation config must be a JSON object");
    for (const auto& [lang, value] : j.items()) {
      auto& rules = languages[lang];
      const json& list = value.is_object() ? value.value("abbreviations", json::array()) : value;
      require(list.is_array(), "abbreviations for '", lang, "' must be an array");
      for (const auto& a : list) {
        std::string s = a.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s.empty() || s.back() != '.') s.push_back('.');
        rules.abbreviations.insert(s);
      }
      if (value.is_object() && value.contains("numeric_ordinals")) {
        rules.numeric_ordinals = value.at("numeric_ordinals").get<bool>();
      }
    }
  }

  const LanguageRules& for_lang(const std::string& lang) const {
    static const LanguageRules empty;
    auto it = languages.find(lang);
    return it == languages.end() ? empty : it->second;
  }
};

// Decodes named (amp, lt, gt, quot, apos, nbsp) and numeric entities.
// Unknown entities are left as written.
inline std::string decode_entities(std::string_view s) {
  static const std::map<std::string, char32_t, std::less<>> named = {
      {"amp", U'&'}, {"lt", U'<'}, {"gt", U'>'}, {"quot", U'"'}, {"apos", U'\''}, {"nbsp", U'\u00A0'}};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      const auto semi = s.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 10) {
        const std::string_view name = s.substr(i + 1, semi - i - 1);
        long code = -1;
        if (name.size() > 1 && name[0] == '#') {
          const bool hex = name[1] == 'x' || name[1] == 'X';
          const std::string digits(name.substr(hex ? 2 : 1));
          if (!digits.empty() &&
              std::all_of(digits.begin(), digits.end(), [&](unsigned char c) { return hex ? std::isxdigit(c) : std::isdigit(c); })) {
            code = std::stol(digits, nullptr, hex ? 16 : 10);
          }
        } else if (auto it = named.find(name); it != named.end()) {
          code = static_cast<long>(it->second);
        }
        if (code > 0 && code <= 0x10FFFF && !(code >= 0xD800 && code <= 0xDFFF)) {
          unicode::append_utf8(out, static_cast<UChar32>(code));
          i = semi + 1;
          continue;
        }
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

namespace detail {

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool starts_with_at(std::string_view s, std::size_t i, std::string_view what) {
  return s.substr(i, what.size()) == what;
}

// Length of a sentence-terminal mark at i: ". ! ?" or the ellipsis character.
inline std::size_t terminal_len(std::string_view s, std::size_t i) {
  if (s[i] == '.' || s[i] == '!' || s[i] == '?') return 1;
  if (starts_with_at(s, i, "\xE2\x80\xA6")) return 3;
  return 0;
}

// Closing quotes and brackets that stay attached to the sentence they end.
inline std::size_t closer_len(std::string_view s, std::size_t i) {
  const char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  for (std::string_view q : {"\xC2\xBB", "\xE2\x80\x9D", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x98"}) {
    if (starts_with_at(s, i, q)) return q.size();
  }
  return 0;
}

inline bool next_is_break(std::string_view s, std::size_t i) {
  if (i >= s.size()) return true;
  if (is_ascii_space(s[i])) return true;
  return starts_with_at(s, i, "\xC2\xA0");
}

// The whitespace-delimited word ending right before position `dot`.
inline std::string word_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_ascii_space(s[b - 1])) --b;
  std::string word(s.substr(b, dot - b));
  const auto first = word.find_first_not_of("(\"'[");
  word = first == std::string::npos ? std::string() : word.substr(first);
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
  return word;
}

inline bool suppresses_split(std::string_view s, std::size_t dot, const LanguageRules& rules) {
  const std::string word = word_before(s, dot);
  if (word.empty()) return false;
  if (rules.abbreviations.contains(word + ".")) return true;
  // single-letter initials: "J. Smith"
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) return true;
  if (rules.numeric_ordinals && word.size() <= 3 &&
      std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return true;
  }
  return false;
}

inline bool paragraph_break_at(std::string_view s, std::size_t i) {
  if (s[i] != '\n') return false;
  for (std::size_t j = i + 1; j < s.size(); ++j) {
    if (s[j] == '\n') return true;
    if (s[j] != ' ' && s[j] != '\t' && s[j] != '\r') return false;
  }
  return false;
}

}  // namespace detail

// Rule-based splitter: breaks after runs of . ! ? or the ellipsis (plus any
// closing quotes) when followed by whitespace or end of text, and at blank
// lines. A single period after a known abbreviation, an initial, or (where
// enabled) a short number does not break. Markup tags are never split.
inline std::vector<std::string> split_sentences(std::string_view text, const LanguageRules& rules) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    std::string seg = unicode::collapse_whitespace(text.substr(start, end - start));
    if (!seg.empty()) out.push_back(std::move(seg));
    start = end;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '<' && i + 1 < text.size() &&
        (std::isalpha(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '/')) {
      const auto close = text.find('>', i);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    if (detail::paragraph_break_at(text, i)) {
      emit(i);
      ++i;
      continue;
    }
    if (const auto t = detail::terminal_len(text, i); t > 0) {
      std::size_t end = i;
      std::size_t marks = 0;
      bool single_period = true;
      while (end < text.size()) {
        const auto len = detail::terminal_len(text, end);
        if (len == 0) break;
        if (text[end] != '.' || len != 1) single_period = false;
        end += len;
        ++marks;
      }
      while (end < text.size()) {
        const auto len = detail::closer_len(text, end);
        if (len == 0) break;
        end += len;
      }
      if (detail::next_is_break(text, end)) {
        const bool abbreviation = single_period && marks == 1 && detail::suppresses_split(text, i, rules);
        if (!abbreviation) emit(end);
      }
      i = end;
      continue;
    }
    ++i;
  }
  emit(text.size());
  return out;
}

// Raw sentence strings of a document body, in order. Undecodable bytes raise
// DocumentError naming the document.
inline std::vector<std::string> tokenize(const RawDocument& doc, const TokenizerRules& rules) {
  if (!unicode::valid_utf8(doc.body)) throw DocumentError(doc.doc_id, "body is not valid UTF-8");
  const std::string decoded = decode_entities(doc.body);
  if (decoded.empty()) return {};
  return split_sentences(unicode::to_nfc(decoded), rules.for_lang(doc.lang));
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace detail {

inline bool iequals_at(std::string_view s, std::size_t i, std::string_view what) {
  if (i + what.size() > s.size()) return false;
  for (std::size_t k = 0; k < what.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[i + k])) != what[k]) return false;
  }
  return true;
}

// Position just past a closing </a> tag starting at i, or npos.
inline std::size_t closing_anchor_end(std::string_view s, std::size_t i) {
  if (!iequals_at(s, i, "</a")) return std::string_view::npos;
  std::size_t j = i + 3;
  while (j < s.size() && is_ascii_space(s[j])) ++j;
  return j < s.size() && s[j] == '>' ? j + 1 : std::string_view::npos;
}

// Replaces each <a ...>...</a> element (or a lone opening tag without a
// matching close) with "url". One left-to-right pass.
inline std::string replace_anchors(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool opens = iequals_at(s, i, "<a") && i + 2 < s.size() &&
                       (is_ascii_space(s[i + 2]) || s[i + 2] == '>');
    if (opens) {
      const auto tag_end = s.find('>', i);
      if (tag_end != std::string_view::npos) {
        std::size_t element_end = tag_end + 1;
        for (std::size_t j = tag_end + 1; j < s.size(); ++j) {
          if (const auto e = closing_anchor_end(s, j); e != std::string_view::npos) {
            element_end = e;
            break;
          }
        }
        out += "url";
        i = element_end;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

inline const std::regex& bare_url_pattern() {
  static const std::regex re(R"(\b(?:https?://|www\.)(?:[^\s<>"]*[^\s<>".,;:!?)\]'])?)", std::regex::icase);
  return re;
}

}  // namespace detail

inline bool contains_url(std::string_view text) {
  return std::regex_search(text.begin(), text.end(), detail::bare_url_pattern());
}

// Anchor and bare-URL replacement plus whitespace collapse, applied until the
// text stops changing. Every replacement shortens the text, so this ends.
inline std::string normalize_text(std::string_view raw) {
  std::string current(raw);
  while (true) {
    std::string next = detail::replace_anchors(current);
    next = std::regex_replace(next, detail::bare_url_pattern(), "url");
    next = unicode::collapse_whitespace(next);
    if (next == current) return next;
    current = std::move(next);
  }
}

// The cleaned sentence text, or nullopt when it is shorter than 15 scalar values.
inline std::optional<std::string> preprocess(std::string_view raw) {
  std::string text = normalize_text(raw);
  if (unicode::scalar_count(text) < kMinSentenceChars) return std::nullopt;
  return text;
}

// ---------------------------------------------------------------------------
// Ingest

struct LanguageCounts {
  std::size_t tokenized = 0;
  std::size_t kept = 0;
  std::size_t dropped_short = 0;
};

struct CorpusStats {
  std::map<std::string, LanguageCounts> per_language;

  std::size_t kept() const {
    std::size_t n = 0;
    for (const auto& [_, c] : per_language) n += c.kept;
    return n;
  }
  std::size_t dropped_short() const {
    std::size_t n = 0;
    for (const auto& [_, c] : per_language) n += c.dropped_short;
    return n;
  }
  double dropped_fraction() const {
    const auto total = kept() + dropped_short();
    return total == 0 ? 0.0 : static_cast<double>(dropped_short()) / static_cast<double>(total);
  }
};

inline json to_json(const CorpusStats& stats) {
  json langs = json::object();
  for (const auto& [lang, c] : stats.per_language) {
    langs[lang] = {{"tokenized", c.tokenized}, {"kept", c.kept}, {"dropped_short", c.dropped_short}};
  }
  return {{"languages", langs},
          {"kept", stats.kept()},
          {"dropped_short", stats.dropped_short()},
          {"dropped_fraction", stats.dropped_fraction()},
          {"min_sentence_chars", kMinSentenceChars}};
}

struct IngestIssue {
  std::string file;
  std::size_t line = 0;
  std::string doc_id;
  std::string message;
};

struct IngestConfig {
  std::set<std::string> langs;
  TokenizerRules rules = TokenizerRules::defaults();
  double max_malformed_fraction = 0.10;
};

struct Corpus {
  std::vector<RawDocument> documents;  // sorted by doc_id
  std::vector<Sentence> sentences;     // document order, then ordinal
  CorpusStats stats;
  std::vector<IngestIssue> issues;
};

// Documents -> sentences. Documents are processed in doc_id order so the
// store does not depend on input order.
inline void build_sentences(Corpus& corpus, const TokenizerRules& rules) {
  std::sort(corpus.documents.begin(), corpus.documents.end(),
            [](const RawDocument& a, const RawDocument& b) { return a.doc_id < b.doc_id; });
  for (const auto& doc : corpus.documents) {
    const auto raw = tokenize(doc, rules);
    auto& counts = corpus.stats.per_language[doc.lang];
    for (std::size_t ordinal = 0; ordinal < raw.size(); ++ordinal) {
      ++counts.tokenized;
      auto text = preprocess(raw[ordinal]);
      if (!text) {
        ++counts.dropped_short;
        continue;
      }
      ++counts.kept;
      Sentence s;
      s.sent_id = make_sent_id(doc.doc_id, ordinal);
      s.doc_id = doc.doc_id;
      s.lang = doc.lang;
      s.char_len = unicode::scalar_count(*text);
      s.text = std::move(*text);
      corpus.sentences.push_back(std::move(s));
    }
  }
}

inline Corpus ingest(const std::vector<std::filesystem::path>& inputs, const IngestConfig& config) {
  Corpus corpus;
  for (const auto& lang : config.langs) corpus.stats.per_language[lang];
  std::size_t lines_seen = 0;
  std::set<std::string> seen_ids;
  for (const auto& path : inputs) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open corpus file ", path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      ++lines_seen;
      try {
        if (!unicode::valid_utf8(line)) throw DocumentError("?", "line is not valid UTF-8");
        RawDocument doc = parse_document(json::parse(line), config.langs);
        if (!seen_ids.insert(doc.doc_id).second) throw DocumentError(doc.doc_id, "duplicate doc_id");
        tokenize(doc, config.rules);  // surfaces undecodable bodies here, with the line number
        corpus.documents.push_back(std::move(doc));
      } catch (const DocumentError& e) {
        corpus.issues.push_back({path.string(), lineno, e.doc_id(), e.what()});
      } catch (const json::exception& e) {
        corpus.issues.push_back({path.string(), lineno, "", std::string("malformed JSON: ") + e.what()});
      }
    }
  }
  if (lines_seen > 0) {
    const double bad = static_cast<double>(corpus.issues.size()) / static_cast<double>(lines_seen);
    if (bad > config.max_malformed_fraction) {
      fail("ingest aborted: ", corpus.issues.size(), " of ", lines_seen, " input lines malformed (limit ",
           config.max_malformed_fraction * 100.0, "%); first: ", corpus.issues.front().file, ":",
           corpus.issues.front().line, ": ", corpus.issues.front().message);
    }
  }
  build_sentences(corpus, config.rules);
  return corpus;
}

// ---------------------------------------------------------------------------
// Store files

template <typename T, typename ToJson>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& rows, ToJson&& to) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write ", path.string());
  for (const auto& row : rows) out << to(row).dump() << '\n';
  require(out.good(), "write failed: ", path.string());
}

template <typename Fn>
void read_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open ", path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      fail(path.string(), ":", lineno, ": ", e.what());
    }
  }
}

inline void write_store(const std::filesystem::path& path, const std::vector<Sentence>& sentences) {
  write_jsonl(path, sentences, [](const Sentence& s) { return to_json(s); });
}

inline std::vector<Sentence> read_store(const std::filesystem::path& path) {
  std::vector<Sentence> out;
  read_jsonl(path, [&](const json& j) { out.push_back(sentence_from_json(j)); });
  return out;
}

inline void write_documents(const std::filesystem::path& path, const std::vector<RawDocument>& docs) {
  write_jsonl(path, docs, [](const RawDocument& d) { return to_json(d, false); });
}

inline std::vector<RawDocument> read_documents(const std::filesystem::path& path) {
  std::vector<RawDocument> out;
  read_jsonl(path, [&](json j) {
    if (!j.contains("body")) j["body"] = "";
    out.push_back(parse_document(j, {}));
  });
  return out;
}

inline json to_json(const IngestIssue& issue) {
  return {{"file", issue.file}, {"line", issue.line}, {"doc_id", issue.doc_id}, {"message", issue.message}};
}

// Writes sentences.jsonl, documents.jsonl, stats.json and errors.jsonl.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  write_store(dir / "sentences.jsonl", corpus.sentences);
  write_documents(dir / "documents.jsonl", corpus.documents);
  write_jsonl(dir / "errors.jsonl", corpus.issues, [](const IngestIssue& i) { return to_json(i); });
  std::ofstream stats(dir / "stats.json", std::ios::binary | std::ios::trunc);
  stats << to_json(corpus.stats).dump(2) << '\n';
}

}  // namespace xlom::corpus
