#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vidsum::text {

// Version tag of the shared metric tokenizer. Bump when the rules change.
inline constexpr std::string_view tokenizer_version = "tok-v1";

namespace detail {

// Decodes one UTF-8 code point starting at `pos`; advances `pos`. Invalid bytes
// decode as themselves so tokenization never throws.
inline char32_t next_code_point(std::string_view s, std::size_t& pos, std::size_t& length) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::size_t n = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0) {
    n = 4;
    cp = b0 & 0x07;
  } else if (b0 >= 0xE0) {
    n = 3;
    cp = b0 & 0x0F;
  } else if (b0 >= 0xC0) {
    n = 2;
    cp = b0 & 0x1F;
  }
  if (pos + n > s.size()) {
    n = 1;
    cp = b0;
  }
  if (n > 1) {
    for (std::size_t i = 1; i < n; ++i) {
      const auto b = static_cast<unsigned char>(s[pos + i]);
      if ((b & 0xC0) != 0x80) {
        n = 1;
        cp = b0;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
  }
  length = n;
  pos += n;
  return cp;
}

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace detail

// Shared tokenizer for every text metric: lowercase, split on Unicode
// whitespace, strip ASCII punctuation, drop empty tokens.
inline std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t pos = 0;
  while (pos < input.size()) {
    const std::size_t start = pos;
    std::size_t length = 0;
    const char32_t cp = detail::next_code_point(input, pos, length);
    if (detail::is_unicode_space(cp)) {
      flush();
    } else if (length == 1) {
      const auto c = static_cast<unsigned char>(input[start]);
      if (std::ispunct(c)) continue;
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      current.append(input.substr(start, length));
    }
  }
  flush();
  return tokens;
}

// Splits on ASCII whitespace only, keeping punctuation. Used for length budgets
// and by the toy policy's vocabulary mapping.
inline std::vector<std::string> split_words(std::string_view input) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < input.size()) {
    while (i < input.size() && std::isspace(static_cast<unsigned char>(input[i]))) ++i;
    const std::size_t start = i;
    while (i < input.size() && !std::isspace(static_cast<unsigned char>(input[i]))) ++i;
    if (i > start) words.emplace_back(input.substr(start, i - start));
  }
  return words;
}

// Collapses whitespace runs to single spaces and trims both ends.
inline std::string normalize_whitespace(std::string_view input) {
  std::string out;
  for (const auto& w : split_words(input)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace vidsum::text
