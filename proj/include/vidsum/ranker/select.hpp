#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"

namespace vidsum::ranker {

struct RankedFrames {
  std::vector<double> scores;
  std::vector<std::size_t> selected;  // descending score, earlier index on ties
  bool clamped = false;               // k exceeded the frame count
};

inline RankedFrames select_top_k(std::span<const double> scores, int k) {
  if (k <= 0) throw ContractError("select_top_k needs k >= 1, got " + std::to_string(k));
  RankedFrames out;
  out.scores.assign(scores.begin(), scores.end());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(idx.size(), static_cast<std::size_t>(k));
  out.clamped = static_cast<std::size_t>(k) > idx.size();
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  out.selected.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

inline void to_json(nlohmann::json& j, const RankedFrames& r) {
  j = {{"scores", r.scores}, {"selected", r.selected}, {"clamped", r.clamped}};
}

inline void from_json(const nlohmann::json& j, RankedFrames& r) {
  r.scores = j.at("scores").get<std::vector<double>>();
  r.selected = j.at("selected").get<std::vector<std::size_t>>();
  r.clamped = j.value("clamped", false);
}

}  // namespace vidsum::ranker
