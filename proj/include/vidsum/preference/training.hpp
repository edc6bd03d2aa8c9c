#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/preference/candidates.hpp"
#include "vidsum/preference/dpo.hpp"
#include "vidsum/preference/policy.hpp"

namespace vidsum::preference {

inline constexpr double default_beta = 0.1;

struct OptimizerConfig {
  double learning_rate = 1.0;
  int epochs = 1;              // passes over the stage's pairs
  int batch_size = 4;
  long max_steps = -1;         // negative: no cap
  std::uint64_t seed = 0;
};

struct IterationResult {
  PolicySnapshot snapshot;
  std::string reference_hash;     // digest of the frozen reference used
  std::vector<double> loss_curve;  // one entry per optimizer step
};

// One curriculum iteration: the policy starts from the iteration-i snapshot,
// which also serves as the frozen reference; reference log-probabilities are
// computed once up front. Plain SGD over shuffled minibatches.
inline IterationResult modified_dpo_iteration(const PolicySnapshot& reference, std::span<const PreferencePair> pairs,
                                              double beta, const OptimizerConfig& config) {
  require(beta > 0.0, "beta must be positive");
  require(config.batch_size > 0, "batch_size must be positive");
  require(config.epochs >= 0, "epochs must be non-negative");
  if (!pairs.empty()) {
    for (const auto& p : pairs) {
      if (p.stage != pairs.front().stage) {
        throw ContractError("pairs mix curriculum stages " + std::to_string(pairs.front().stage) + " and " +
                            std::to_string(p.stage));
      }
    }
  }

  const CategoricalPolicy policy(reference.shape());
  struct Encoded {
    std::vector<int> chosen, rejected;
    double ref_chosen, ref_rejected;
  };
  std::vector<Encoded> data;
  data.reserve(pairs.size());
  for (const auto& p : pairs) {
    Encoded e{policy.encode(p.chosen), policy.encode(p.rejected), 0.0, 0.0};
    e.ref_chosen = policy.sequence_logprob(reference.parameters(), e.chosen);
    e.ref_rejected = policy.sequence_logprob(reference.parameters(), e.rejected);
    data.push_back(std::move(e));
  }

  std::vector<double> theta = reference.parameters();
  std::vector<double> grad(theta.size());
  std::vector<double> losses;
  Rng rng(config.seed);
  long steps = 0;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs && !data.empty(); ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      if (config.max_steps >= 0 && steps >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<DpoBatchItem> batch;
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = data[order[b]];
        batch.push_back({policy.sequence_logprob(theta, e.chosen), policy.sequence_logprob(theta, e.rejected),
                         e.ref_chosen, e.ref_rejected, beta});
      }
      const auto result = dpo_loss(batch);
      if (!std::isfinite(result.loss)) {
        std::ostringstream msg;
        msg << "training diverged at iteration " << reference.iteration() + 1 << ", step " << steps
            << ": loss=" << result.loss;
        throw NumericError(msg.str());
      }
      losses.push_back(result.loss);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = data[order[b]];
        policy.accumulate_gradient(theta, e.chosen, result.grad_policy_chosen[b - start], grad);
        policy.accumulate_gradient(theta, e.rejected, result.grad_policy_rejected[b - start], grad);
      }
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * grad[i];
      for (double v : theta)
        if (!std::isfinite(v)) throw NumericError("training diverged: non-finite parameter after step " + std::to_string(steps));
      ++steps;
    }
  }
  return {PolicySnapshot(reference.iteration() + 1, reference.shape(), std::move(theta)), reference.param_hash(),
          std::move(losses)};
}

// Groups pairs by stage, ascending.
inline std::map<int, std::vector<PreferencePair>> pairs_by_stage(std::span<const PreferencePair> pairs) {
  std::map<int, std::vector<PreferencePair>> out;
  for (const auto& p : pairs) out[p.stage].push_back(p);
  return out;
}

// Chains iterations 1..stages; iteration s trains on stage-s pairs against the
// snapshot from iteration s-1.
inline std::vector<IterationResult> run_curriculum(const PolicySnapshot& initial, std::span<const PreferencePair> pairs,
                                                   int stages, double beta, const OptimizerConfig& config) {
  require(stages >= 1, "need at least one curriculum stage");
  const auto grouped = pairs_by_stage(pairs);
  std::vector<IterationResult> results;
  const PolicySnapshot* current = &initial;
  for (int s = 1; s <= stages; ++s) {
    const auto it = grouped.find(s);
    if (it == grouped.end()) throw ValidationError("no preference pairs for curriculum stage " + std::to_string(s));
    auto cfg = config;
    cfg.seed = derive_seed(config.seed, "stage-" + std::to_string(s));
    results.push_back(modified_dpo_iteration(*current, it->second, beta, cfg));
    current = &results.back().snapshot;
  }
  return results;
}

// Candidate the policy likes best, by mean per-token log-probability; earlier
// index on ties.
inline std::size_t select_summary(const PolicySnapshot& snapshot, const std::vector<std::string>& candidates) {
  require(!candidates.empty(), "no candidates to select from");
  const CategoricalPolicy policy(snapshot.shape());
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto ids = policy.encode(candidates[i]);
    const double score =
        ids.empty() ? -std::numeric_limits<double>::infinity()
                    : policy.sequence_logprob(snapshot.parameters(), ids) / static_cast<double>(ids.size());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace vidsum::preference
