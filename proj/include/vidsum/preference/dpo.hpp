#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"

namespace vidsum::preference {

// Sequence log-probabilities of one (chosen, rejected) pair under the policy
// being trained and under the frozen reference.
struct DpoBatchItem {
  double logp_policy_chosen = 0.0;
  double logp_policy_rejected = 0.0;
  double logp_ref_chosen = 0.0;
  double logp_ref_rejected = 0.0;
  double beta = 0.1;

  // (log pi(y_w) - log ref(y_w)) - (log pi(y_l) - log ref(y_l))
  double margin() const noexcept {
    return (logp_policy_chosen - logp_ref_chosen) - (logp_policy_rejected - logp_ref_rejected);
  }
};

struct DpoResult {
  double loss = 0.0;
  std::vector<double> grad_policy_chosen;    // dL / d logp_policy_chosen, per item
  std::vector<double> grad_policy_rejected;  // dL / d logp_policy_rejected, per item
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Mean over items of -log sigmoid(beta * margin), with gradients with respect
// to the policy log-probabilities.
inline DpoResult dpo_loss(std::span<const DpoBatchItem> batch) {
  require(!batch.empty(), "dpo batch must not be empty");
  const double n = static_cast<double>(batch.size());
  DpoResult out;
  out.grad_policy_chosen.resize(batch.size());
  out.grad_policy_rejected.resize(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = batch[i];
    if (!(item.beta > 0.0)) throw ContractError("beta must be positive (item " + std::to_string(i) + ")");
    if (!std::isfinite(item.logp_policy_chosen) || !std::isfinite(item.logp_policy_rejected) ||
        !std::isfinite(item.logp_ref_chosen) || !std::isfinite(item.logp_ref_rejected) ||
        !std::isfinite(item.beta)) {
      throw NumericError("non-finite input in dpo batch item " + std::to_string(i));
    }
    const double z = item.beta * item.margin();
    total += softplus(-z);
    const double g = item.beta * sigmoid(-z) / n;
    out.grad_policy_chosen[i] = -g;
    out.grad_policy_rejected[i] = g;
  }
  out.loss = total / n;
  return out;
}

}  // namespace vidsum::preference
