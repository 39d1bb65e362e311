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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "xlom/error.hpp"

namespace xlom::unicode {

inline bool valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto n = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

// Number of Unicode scalar values. Input must be valid UTF-8.
inline std::size_t scalar_count(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char ch : s) {
    if ((ch & 0xC0) != 0x80) ++count;
  }
  return count;
}

template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto n = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < n) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    fn(c, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
  }
}

inline void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  UBool err = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, U8_MAX_LENGTH, c, err);
  if (!err) out.append(buf, static_cast<std::size_t>(len));
}

namespace detail {

inline std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) fail("ICU NFC normalizer unavailable: ", u_errorName(status));
  return *n;
}

inline const icu::Normalizer2& nfd_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) fail("ICU NFD normalizer unavailable: ", u_errorName(status));
  return *n;
}

}  // namespace detail

inline std::string to_nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  const auto normalized = detail::nfc_instance().normalize(u, status);
  if (U_FAILURE(status)) fail("NFC normalization failed: ", u_errorName(status));
  return detail::to_utf8(normalized);
}

inline bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

// Runs of Unicode whitespace become one ASCII space; leading/trailing removed.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for_each_codepoint(s, [&](UChar32 c, std::size_t pos, std::size_t len) {
    if (c >= 0 && is_space(c)) {
      pending = true;
      return;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    out.append(s.substr(pos, len));
  });
  return out;
}

// Lowercase, expand sharp s, strip combining marks, recompose.
// "Dünger" -> "dunger", "Straße" -> "strasse".
inline std::string fold(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  u.findAndReplace(icu::UnicodeString(static_cast<UChar32>(0x00DF)), icu::UnicodeString("ss"));
  const auto decomposed = detail::nfd_instance().normalize(u, status);
  if (U_FAILURE(status)) fail("NFD normalization failed: ", u_errorName(status));
  icu::UnicodeString stripped;
  for (std::int32_t i = 0; i < decomposed.length();) {
    const UChar32 c = decomposed.char32At(i);
    if (u_charType(c) != U_NON_SPACING_MARK) stripped.append(c);
    i += U16_LENGTH(c);
  }
  const auto composed = detail::nfc_instance().normalize(stripped, status);
  if (U_FAILURE(status)) fail("NFC normalization failed: ", u_errorName(status));
  return detail::to_utf8(composed);
}

inline bool is_apostrophe(UChar32 c) { return c == 0x27 || c == 0x2019; }

// Folded word tokens: split on anything that is not a letter or digit,
// apostrophes are removed inside words ("don't" -> "dont"), tokens shorter
// than two scalar values are dropped.
inline std::vector<std::string> word_tokens(std::string_view text) {
  const std::string folded = fold(text);
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;
  auto flush = [&] {
    if (current_len >= 2) tokens.push_back(current);
    current.clear();
    current_len = 0;
  };
  for_each_codepoint(folded, [&](UChar32 c, std::size_t pos, std::size_t len) {
    if (c >= 0 && u_isalnum(c)) {
      current.append(folded, pos, len);
      ++current_len;
    } else if (c >= 0 && is_apostrophe(c) && current_len > 0) {
      // joined
    } else {
      flush();
    }
  });
  flush();
  return tokens;
}

}  // namespace xlom::unicode
