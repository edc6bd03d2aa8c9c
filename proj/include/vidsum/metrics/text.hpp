#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vidsum/core/error.hpp"
#include "vidsum/core/external.hpp"
#include "vidsum/core/text.hpp"

namespace vidsum::metrics {

using Tokens = std::vector<std::string>;

struct TextScore {
  std::string metric;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double harmonic_f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace detail {

inline std::map<std::vector<std::string_view>, int> ngram_counts(const Tokens& tokens, int n) {
  std::map<std::vector<std::string_view>, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::vector<std::string_view> key;
    for (int j = 0; j < n; ++j) key.emplace_back(tokens[i + static_cast<std::size_t>(j)]);
    ++counts[key];
  }
  return counts;
}

inline int ngram_total(const Tokens& tokens, int n) {
  return std::max(0, static_cast<int>(tokens.size()) - n + 1);
}

inline int clipped_overlap(const Tokens& cand, const Tokens& ref, int n) {
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  int overlap = 0;
  for (const auto& [gram, count] : c) {
    const auto it = r.find(gram);
    if (it != r.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

}  // namespace detail

inline TextScore rouge_n(const Tokens& candidate, const Tokens& reference, int n) {
  require(n >= 1, "rouge_n needs n >= 1");
  TextScore s{"ROUGE-" + std::to_string(n)};
  const int cand_total = detail::ngram_total(candidate, n);
  const int ref_total = detail::ngram_total(reference, n);
  if (cand_total == 0 || ref_total == 0) return s;
  const int overlap = detail::clipped_overlap(candidate, reference, n);
  s.precision = static_cast<double>(overlap) / cand_total;
  s.recall = static_cast<double>(overlap) / ref_total;
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline TextScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  TextScore s{"ROUGE-L"};
  if (candidate.empty() || reference.empty()) return s;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  s.precision = lcs / static_cast<double>(candidate.size());
  s.recall = lcs / static_cast<double>(reference.size());
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

// BLEU-1..max_n for one candidate against one reference. Zero clipped counts
// are replaced by 1 / (2 * candidate n-gram count). A candidate with no n-grams
// of order n scores 0 for BLEU-k, k >= n.
inline std::vector<double> bleu(const Tokens& candidate, const Tokens& reference, int max_n = 4) {
  require(max_n >= 1, "bleu needs max_n >= 1");
  std::vector<double> out(static_cast<std::size_t>(max_n), 0.0);
  if (candidate.empty()) return out;
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = std::min(1.0, std::exp(1.0 - r / c));
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const int total = detail::ngram_total(candidate, n);
    if (total == 0) break;
    const int overlap = detail::clipped_overlap(candidate, reference, n);
    const double p = overlap > 0 ? static_cast<double>(overlap) / total : 1.0 / (2.0 * total);
    log_sum += std::log(p);
    out[static_cast<std::size_t>(n - 1)] = bp * std::exp(log_sum / n);
  }
  return out;
}

// Maps a token list to one vector per token. Candidate and reference tokens
// are embedded in a single call so they share one space.
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual std::vector<Eigen::VectorXd> embed(const Tokens& tokens) const = 0;
};

// One dimension per distinct token in the call.
class OneHotEmbedder final : public TokenEmbedder {
 public:
  std::vector<Eigen::VectorXd> embed(const Tokens& tokens) const override {
    std::map<std::string, Eigen::Index> vocab;
    for (const auto& t : tokens) vocab.emplace(t, static_cast<Eigen::Index>(vocab.size()));
    std::vector<Eigen::VectorXd> out;
    for (const auto& t : tokens) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
      v(vocab.at(t)) = 1.0;
      out.push_back(std::move(v));
    }
    return out;
  }
};

class ExternalTokenEmbedder final : public TokenEmbedder {
 public:
  explicit ExternalTokenEmbedder(std::string command) : command_(std::move(command)) {}
  std::vector<Eigen::VectorXd> embed(const Tokens& tokens) const override {
    const auto r = command_.call({{"role", "token-embedder"}, {"tokens", tokens}});
    if (!r.contains("embeddings") || !r["embeddings"].is_array() || r["embeddings"].size() != tokens.size()) {
      throw BackendError("token-embedder response must hold one embedding per token");
    }
    std::vector<Eigen::VectorXd> out;
    for (const auto& row : r["embeddings"]) {
      const auto v = row.get<std::vector<double>>();
      out.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return out;
  }

 private:
  ExternalCommand command_;
};

// Greedy cosine matching in the style of BERTScore.
inline TextScore embedding_f1(const Tokens& candidate, const Tokens& reference, const TokenEmbedder& embedder) {
  TextScore s{"EMB-F1"};
  if (candidate.empty() || reference.empty()) return s;
  Tokens all = candidate;
  all.insert(all.end(), reference.begin(), reference.end());
  std::vector<Eigen::VectorXd> vecs;
  try {
    vecs = embedder.embed(all);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(std::string("token embedder failed: ") + e.what());
  }
  if (vecs.size() != all.size()) throw BackendError("token embedder returned the wrong number of vectors");
  for (auto& v : vecs) {
    if (v.size() != vecs.front().size()) throw BackendError("token embedder returned vectors of mixed length");
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
  }
  const std::size_t nc = candidate.size();
  Eigen::MatrixXd sim(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(reference.size()));
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t j = 0; j < reference.size(); ++j)
      sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vecs[i].dot(vecs[nc + j]);
  s.precision = std::clamp(sim.rowwise().maxCoeff().mean(), 0.0, 1.0);
  s.recall = std::clamp(sim.colwise().maxCoeff().mean(), 0.0, 1.0);
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

// Text convenience overloads with the shared tokenizer.
inline TextScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
  return rouge_n(text::tokenize(candidate), text::tokenize(reference), n);
}
inline TextScore rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(text::tokenize(candidate), text::tokenize(reference));
}
inline std::vector<double> bleu(std::string_view candidate, std::string_view reference, int max_n = 4) {
  return bleu(text::tokenize(candidate), text::tokenize(reference), max_n);
}

}  // namespace vidsum::metrics
