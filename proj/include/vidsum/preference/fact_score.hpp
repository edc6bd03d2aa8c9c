#pragma once

#include <cctype>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vidsum::preference {

struct FactItems {
  std::vector<std::string> numerals;  // normalized: thousands separators removed
  std::vector<std::string> names;     // runs of >= 2 capitalized words
};

namespace detail {

inline const std::regex& numeral_pattern() {
  // 10, 5.4, 72,400, 10-12%, +1.2%, 6.5%
  static const std::regex re(R"((\d[\d,]*(?:\.\d+)?)(?:\s*-\s*(\d[\d,]*(?:\.\d+)?))?(%?))");
  return re;
}

inline std::string strip_commas(std::string s) {
  std::erase(s, ',');
  return s;
}

inline bool is_capitalized(std::string_view word) {
  return !word.empty() && std::isupper(static_cast<unsigned char>(word.front()));
}

inline std::string trim_punct(std::string_view word) {
  std::size_t a = 0, b = word.size();
  while (a < b && std::ispunct(static_cast<unsigned char>(word[a]))) ++a;
  while (b > a && std::ispunct(static_cast<unsigned char>(word[b - 1]))) --b;
  return std::string(word.substr(a, b - a));
}

}  // namespace detail

inline std::vector<std::string> extract_numerals(std::string_view text) {
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), detail::numeral_pattern()); it != std::sregex_iterator();
       ++it) {
    const auto& m = *it;
    // A trailing comma belongs to the sentence, not the number.
    std::string first = m[1].str();
    while (!first.empty() && first.back() == ',') first.pop_back();
    std::string item = detail::strip_commas(first);
    if (m[2].matched) {
      std::string second = m[2].str();
      while (!second.empty() && second.back() == ',') second.pop_back();
      item += "-" + detail::strip_commas(second);
    }
    item += m[3].str();
    out.push_back(std::move(item));
  }
  return out;
}

inline std::vector<std::string> extract_names(std::string_view text) {
  std::vector<std::string> out;
  std::vector<std::string> run;
  auto flush = [&] {
    if (run.size() >= 2) {
      std::string name;
      for (std::size_t i = 0; i < run.size(); ++i) name += (i ? " " : "") + run[i];
      out.push_back(std::move(name));
    }
    run.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    const std::string_view raw = text.substr(start, i - start);
    const std::string word = detail::trim_punct(raw);
    const bool alpha_word = !word.empty() && std::isalpha(static_cast<unsigned char>(word.front()));
    if (alpha_word && detail::is_capitalized(word)) {
      // Punctuation before the word breaks a name; punctuation after ends it.
      if (!raw.empty() && std::ispunct(static_cast<unsigned char>(raw.front()))) flush();
      run.push_back(word);
      if (std::ispunct(static_cast<unsigned char>(raw.back()))) flush();
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline FactItems extract_fact_items(std::string_view text) { return {extract_numerals(text), extract_names(text)}; }

namespace detail {

inline bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  std::size_t pos = haystack.find(phrase);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack[pos - 1]));
    const std::size_t end = pos + phrase.size();
    const bool right_ok = end >= haystack.size() || !std::isalnum(static_cast<unsigned char>(haystack[end]));
    if (left_ok && right_ok) return true;
    pos = haystack.find(phrase, pos + 1);
  }
  return false;
}

}  // namespace detail

// Fraction of the summary's checkable facts (numerals, percentages, multi-word
// capitalized names) that also occur in the source prompt. Numerals match
// against the prompt's own normalized numerals; names match as whole-word
// substrings. A summary with nothing to check scores 1.
inline double fact_consistency_score(std::string_view summary, std::string_view source) {
  const auto items = extract_fact_items(summary);
  const std::size_t total = items.numerals.size() + items.names.size();
  if (total == 0) return 1.0;
  const auto source_numerals = extract_numerals(source);
  const std::set<std::string> known(source_numerals.begin(), source_numerals.end());
  std::size_t matched = 0;
  for (const auto& n : items.numerals)
    if (known.contains(n)) ++matched;
  for (const auto& name : items.names)
    if (detail::contains_phrase(source, name)) ++matched;
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace vidsum::preference
