#pragma once

#include <set>
#include <span>
#include <string>

#include "vidsum/core/error.hpp"

namespace vidsum::metrics {

struct SetScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline SetScore frame_selection_score(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold) {
  if (selected.empty() && gold.empty()) return {1.0, 1.0, 1.0};
  if (selected.empty() || gold.empty()) return {};
  std::size_t hit = 0;
  for (auto i : selected) hit += gold.count(i);
  const double p = static_cast<double>(hit) / static_cast<double>(selected.size());
  const double r = static_cast<double>(hit) / static_cast<double>(gold.size());
  return {p, r, p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0};
}

inline double frame_selection_f1(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold) {
  return frame_selection_score(selected, gold).f1;
}

enum class Vote { match, tie, mismatch };

inline Vote parse_vote(const std::string& s) {
  if (s == "match") return Vote::match;
  if (s == "tie") return Vote::tie;
  if (s == "mismatch") return Vote::mismatch;
  throw ValidationError("unknown vote '" + s + "' (expected match, tie or mismatch)");
}

// 1 per match, 0.5 per tie, 0 per mismatch, averaged.
inline double tie_discounted_accuracy(std::span<const Vote> votes) {
  if (votes.empty()) throw ContractError("tie_discounted_accuracy needs at least one vote");
  double total = 0.0;
  for (auto v : votes) total += v == Vote::match ? 1.0 : v == Vote::tie ? 0.5 : 0.0;
  return total / static_cast<double>(votes.size());
}

}  // namespace vidsum::metrics
