#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/bos/prompt.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/external.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/core/text.hpp"
#include "vidsum/preference/fact_score.hpp"

namespace vidsum::preference {

inline constexpr int default_candidate_count = 4;

struct GenerationConfig {
  double temperature = 0.7;
  std::uint64_t seed = 0;
  int max_len = bos::default_max_summary_len;

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

struct GenerationRequest {
  const bos::BOSPrompt* prompt = nullptr;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double temperature = 0.7;
  int max_len = bos::default_max_summary_len;
};

struct CandidateSet {
  std::string prompt_id;
  std::vector<std::string> candidates;
  GenerationConfig generation_config;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct CandidateRanking {
  std::string prompt_id;
  std::vector<std::size_t> order;  // candidate indices, best first
  std::vector<double> scores;      // judge score per candidate index
  std::string judge_id;

  friend bool operator==(const CandidateRanking&, const CandidateRanking&) = default;
};

struct PreferencePair {
  std::string prompt_id;
  std::string chosen;
  std::string rejected;
  int stage = 1;
  std::size_t chosen_rank = 1;    // 1-based position in the ranking
  std::size_t rejected_rank = 2;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual std::string generate(const GenerationRequest& request) const = 0;
};

// Scores every candidate; higher is better. Equal scores are unordered and get
// completed by candidate index.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> score(const bos::BOSPrompt& prompt, const std::vector<std::string>& candidates) const = 0;
};

inline std::string truncate_words(std::string_view text, int max_len) {
  auto words = text::split_words(text);
  if (max_len >= 0 && words.size() > static_cast<std::size_t>(max_len)) words.resize(static_cast<std::size_t>(max_len));
  return text::join(words);
}

// ---------------------------------------------------------------------------
// Mocks

class TemplateGenerator final : public GeneratorBackend {
 public:
  std::string generate(const GenerationRequest& r) const override {
    return "summary variant " + std::to_string(r.index);
  }
};

// Extractive stand-in for a fine-tuned generator: picks transcript lines, drops
// the timing prefix, and at higher temperature sometimes swaps a figure for a
// made-up one, which gives the judge something to prefer.
class ExtractiveGenerator final : public GeneratorBackend {
 public:
  std::string generate(const GenerationRequest& r) const override {
    require(r.prompt != nullptr, "generation request without prompt");
    Rng rng(r.seed);
    std::vector<std::string> lines;
    std::size_t start = 0;
    const auto& t = r.prompt->sections.transcript;
    while (start <= t.size()) {
      const auto end = std::min(t.find('\n', start), t.size());
      auto line = t.substr(start, end - start);
      if (const auto close = line.find("] "); close != std::string::npos) line = line.substr(close + 2);
      if (!line.empty()) lines.push_back(line);
      start = end + 1;
    }
    std::vector<std::string> picked;
    for (const auto& line : lines)
      if (rng.uniform() < 0.6) picked.push_back(line);
    if (picked.empty() && !lines.empty()) picked.push_back(lines[rng.below(lines.size())]);

    static constexpr std::string_view invented[] = {"15%", "9000", "3.1%", "25%"};
    std::string out;
    for (auto& sentence : picked) {
      if (rng.uniform() < 0.5 * r.temperature) {
        auto words = text::split_words(sentence);
        for (auto& w : words) {
          if (!w.empty() && std::isdigit(static_cast<unsigned char>(w.front()))) {
            w = std::string(invented[rng.below(std::size(invented))]);
            break;
          }
        }
        sentence = text::join(words);
      }
      if (!out.empty()) out += ' ';
      out += sentence;
    }
    return out;
  }
};

class LengthJudge final : public JudgeBackend {
 public:
  std::string id() const override { return "mock:length"; }
  std::vector<double> score(const bos::BOSPrompt&, const std::vector<std::string>& candidates) const override {
    std::vector<double> s;
    for (const auto& c : candidates) s.push_back(static_cast<double>(c.size()));
    return s;
  }
};

class ConstantJudge final : public JudgeBackend {
 public:
  std::string id() const override { return "mock:constant"; }
  std::vector<double> score(const bos::BOSPrompt&, const std::vector<std::string>& candidates) const override {
    return std::vector<double>(candidates.size(), 1.0);
  }
};

// Prefers candidates whose figures and names are grounded in the prompt, then
// longer coverage of the transcript.
class FactJudge final : public JudgeBackend {
 public:
  std::string id() const override { return "mock:fact"; }
  std::vector<double> score(const bos::BOSPrompt& prompt, const std::vector<std::string>& candidates) const override {
    const auto reference = text::tokenize(prompt.sections.transcript);
    std::vector<double> s;
    for (const auto& c : candidates) {
      const auto tokens = text::tokenize(c);
      const double coverage =
          reference.empty() ? 0.0
                            : std::min(1.0, static_cast<double>(tokens.size()) / static_cast<double>(reference.size()));
      s.push_back(fact_consistency_score(c, prompt.rendered) + 0.25 * coverage);
    }
    return s;
  }
};

class ExternalGenerator final : public GeneratorBackend {
 public:
  explicit ExternalGenerator(std::string command) : command_(std::move(command)) {}
  std::string generate(const GenerationRequest& r) const override {
    const auto resp = command_.call({{"role", "generator"},
                                     {"prompt", r.prompt ? r.prompt->rendered : ""},
                                     {"seed", r.seed},
                                     {"temperature", r.temperature},
                                     {"max_len", r.max_len}});
    if (!resp.contains("text") || !resp["text"].is_string()) throw BackendError("generator response lacks 'text'");
    return resp["text"].get<std::string>();
  }

 private:
  ExternalCommand command_;
};

// Response either {"scores":[...]} or {"order":[best, ...]}; a partial order is
// completed by candidate index.
class ExternalJudge final : public JudgeBackend {
 public:
  explicit ExternalJudge(std::string command) : command_(std::move(command)) {}
  std::string id() const override { return "external:" + command_.command(); }
  std::vector<double> score(const bos::BOSPrompt& prompt, const std::vector<std::string>& candidates) const override {
    const auto resp = command_.call({{"role", "judge"}, {"prompt", prompt.rendered}, {"candidates", candidates}});
    if (resp.contains("scores")) return resp["scores"].get<std::vector<double>>();
    if (resp.contains("order")) {
      const auto order = resp["order"].get<std::vector<std::size_t>>();
      std::vector<double> s(candidates.size(), 0.0);
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (order[pos] >= candidates.size()) throw BackendError("judge order names unknown candidate");
        s[order[pos]] = static_cast<double>(order.size() - pos);
      }
      return s;
    }
    throw BackendError("judge response needs 'scores' or 'order'");
  }

 private:
  ExternalCommand command_;
};

// ---------------------------------------------------------------------------
// Operations

class RankingError : public BackendError {
 public:
  explicit RankingError(const std::string& what) : BackendError("ranking failed: " + what) {}
};

// k candidates; candidate i is generated with seed config.seed + i.
inline CandidateSet generate_candidates(const bos::BOSPrompt& prompt, int k, const GeneratorBackend& backend,
                                        const GenerationConfig& config = {}) {
  require(k >= 2, "need at least 2 candidates to form a preference pair");
  require(config.max_len > 0, "max_len must be positive");
  CandidateSet set{prompt.asset_id, {}, config};
  for (int i = 0; i < k; ++i) {
    GenerationRequest req{&prompt, static_cast<std::size_t>(i), config.seed + static_cast<std::uint64_t>(i),
                          config.temperature, config.max_len};
    try {
      set.candidates.push_back(truncate_words(backend.generate(req), config.max_len));
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError("generation failed for candidate " + std::to_string(i) + ": " + e.what());
    }
  }
  return set;
}

// Strict order by descending judge score, ascending index on ties.
inline std::vector<std::size_t> order_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline CandidateRanking rank_candidates(const bos::BOSPrompt& prompt, const CandidateSet& cands,
                                        const JudgeBackend& judge) {
  std::vector<double> scores;
  try {
    scores = judge.score(prompt, cands.candidates);
  } catch (const std::exception& e) {
    throw RankingError(e.what());
  }
  if (scores.size() != cands.candidates.size()) {
    throw RankingError("judge returned " + std::to_string(scores.size()) + " scores for " +
                       std::to_string(cands.candidates.size()) + " candidates");
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw RankingError("judge returned a non-finite score");
  return {cands.prompt_id, order_by_score(scores), scores, judge.id()};
}

// Best candidate against the worst first, then against progressively better
// ones: for four candidates (R1,R4), (R1,R3), (R1,R2) at stages 1, 2, 3.
// Pairs whose two texts are identical carry no preference and are dropped.
inline std::vector<PreferencePair> curriculum_pairs(const CandidateRanking& ranking, const CandidateSet& cands) {
  const auto k = ranking.order.size();
  require(k >= 2, "curriculum needs at least 2 ranked candidates");
  for (auto idx : ranking.order) require(idx < cands.candidates.size(), "ranking refers to a missing candidate");
  std::vector<PreferencePair> pairs;
  const auto& best = cands.candidates[ranking.order.front()];
  for (std::size_t stage = 1; stage < k; ++stage) {
    const std::size_t rejected_pos = k - stage;  // 0-based position in the ranking
    const auto& rejected = cands.candidates[ranking.order[rejected_pos]];
    if (rejected == best) continue;
    pairs.push_back({ranking.prompt_id, best, rejected, static_cast<int>(stage), 1, rejected_pos + 1});
  }
  return pairs;
}

inline void to_json(nlohmann::json& j, const GenerationConfig& g) {
  j = {{"temperature", g.temperature}, {"seed", g.seed}, {"max_len", g.max_len}};
}
inline void from_json(const nlohmann::json& j, GenerationConfig& g) {
  g.temperature = j.at("temperature").get<double>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.max_len = j.at("max_len").get<int>();
}
inline void to_json(nlohmann::json& j, const CandidateSet& c) {
  j = {{"prompt_id", c.prompt_id}, {"candidates", c.candidates}, {"generation_config", c.generation_config}};
}
inline void from_json(const nlohmann::json& j, CandidateSet& c) {
  c.prompt_id = j.at("prompt_id").get<std::string>();
  c.candidates = j.at("candidates").get<std::vector<std::string>>();
  c.generation_config = j.at("generation_config").get<GenerationConfig>();
}
inline void to_json(nlohmann::json& j, const CandidateRanking& r) {
  j = {{"prompt_id", r.prompt_id}, {"order", r.order}, {"scores", r.scores}, {"judge_id", r.judge_id}};
}
inline void from_json(const nlohmann::json& j, CandidateRanking& r) {
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.order = j.at("order").get<std::vector<std::size_t>>();
  r.scores = j.at("scores").get<std::vector<double>>();
  r.judge_id = j.at("judge_id").get<std::string>();
}
inline void to_json(nlohmann::json& j, const PreferencePair& p) {
  j = {{"prompt_id", p.prompt_id}, {"chosen", p.chosen},           {"rejected", p.rejected},
       {"stage", p.stage},         {"chosen_rank", p.chosen_rank}, {"rejected_rank", p.rejected_rank}};
}
inline void from_json(const nlohmann::json& j, PreferencePair& p) {
  p.prompt_id = j.at("prompt_id").get<std::string>();
  p.chosen = j.at("chosen").get<std::string>();
  p.rejected = j.at("rejected").get<std::string>();
  p.stage = j.at("stage").get<int>();
  p.chosen_rank = j.value("chosen_rank", std::size_t{1});
  p.rejected_rank = j.value("rejected_rank", std::size_t{2});
}

}  // namespace vidsum::preference
