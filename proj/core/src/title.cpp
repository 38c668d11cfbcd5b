// Copyright 2026 The Authors.
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

#include "convrec/title.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <array>
#include <stdexcept>

namespace convrec {
namespace {

const icu::Normalizer2& nfkc_casefold() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFKCCasefoldInstance(status);
  if (U_FAILURE(status) || normalizer == nullptr) {
    throw std::runtime_error(std::string("ICU NFKC_Casefold unavailable: ") + u_errorName(status));
  }
  return *normalizer;
}

icu::UnicodeString fold(const icu::UnicodeString& text) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfkc_casefold().normalize(text, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  return out;
}

// Drops punctuation and collapses whitespace runs into one space, trimmed.
icu::UnicodeString strip_and_collapse(const icu::UnicodeString& text) {
  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);
    if (u_ispunct(c)) continue;
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (pending_space) {
      out.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    out.append(c);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// "matrix, the" -> "the matrix". Input is already casefolded.
std::string move_trailing_article(std::string text) {
  const auto comma = text.rfind(',');
  if (comma == std::string::npos) return text;
  const std::string_view article = trim(std::string_view(text).substr(comma + 1));
  static constexpr std::array<std::string_view, 3> kArticles = {"the", "a", "an"};
  for (auto candidate : kArticles) {
    if (article == candidate) {
      const std::string_view head = trim(std::string_view(text).substr(0, comma));
      if (head.empty()) return text;
      return std::string(article) + " " + std::string(head);
    }
  }
  return text;
}

}  // namespace

std::string normalize_title(std::string_view raw) {
  icu::UnicodeString folded = fold(icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size()))));
  std::string utf8;
  folded.toUTF8String(utf8);
  utf8 = move_trailing_article(std::move(utf8));

  // Removing punctuation can bring a base letter next to a combining mark,
  // so fold once more to stay in normal form.
  icu::UnicodeString stripped = strip_and_collapse(icu::UnicodeString::fromUTF8(utf8));
  icu::UnicodeString result = strip_and_collapse(fold(stripped));
  std::string out;
  result.toUTF8String(out);
  return out;
}

}  // namespace convrec
