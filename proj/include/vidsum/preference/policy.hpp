#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/core/text.hpp"

namespace vidsum::preference {

inline constexpr int default_policy_vocab = 100;

// Small categorical language model over a hashed vocabulary. Unigram: one
// logit row. Bigram: one row per previous token plus a start row. The response
// is scored on its own; prompt tokens never enter the sum.
struct PolicyShape {
  int vocab_size = default_policy_vocab;
  bool bigram = true;

  std::size_t rows() const noexcept { return bigram ? static_cast<std::size_t>(vocab_size) + 1 : 1; }
  std::size_t parameter_count() const noexcept { return rows() * static_cast<std::size_t>(vocab_size); }

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

class CategoricalPolicy {
 public:
  explicit CategoricalPolicy(PolicyShape shape = {}) : shape_(shape) {
    require(shape_.vocab_size >= 2, "policy vocabulary needs at least 2 tokens");
  }

  const PolicyShape& shape() const noexcept { return shape_; }

  int token_id(std::string_view token) const {
    return static_cast<int>(fnv1a(token) % static_cast<std::uint64_t>(shape_.vocab_size));
  }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& t : text::tokenize(text)) ids.push_back(token_id(t));
    return ids;
  }

  // Sum of log p(token | context) over the response tokens.
  double sequence_logprob(std::span<const double> params, std::span<const int> tokens) const {
    check(params);
    double total = 0.0;
    std::size_t context = start_row();
    for (int t : tokens) {
      const auto row = params.subspan(context * V(), V());
      total += row[static_cast<std::size_t>(t)] - log_sum_exp(row);
      context = next_row(t);
    }
    return total;
  }

  // grad += scale * d sequence_logprob / d params
  void accumulate_gradient(std::span<const double> params, std::span<const int> tokens, double scale,
                           std::span<double> grad) const {
    check(params);
    require(grad.size() == params.size(), "gradient buffer size mismatch");
    std::size_t context = start_row();
    std::vector<double> probs(V());
    for (int t : tokens) {
      const auto row = params.subspan(context * V(), V());
      const double lse = log_sum_exp(row);
      for (std::size_t v = 0; v < V(); ++v) probs[v] = std::exp(row[v] - lse);
      auto g = grad.subspan(context * V(), V());
      for (std::size_t v = 0; v < V(); ++v) g[v] -= scale * probs[v];
      g[static_cast<std::size_t>(t)] += scale;
      context = next_row(t);
    }
  }

  std::vector<double> initial_parameters(std::uint64_t seed, double stddev = 0.01) const {
    Rng rng(seed);
    std::vector<double> p(shape_.parameter_count());
    for (auto& x : p) x = rng.normal(0.0, stddev);
    return p;
  }

 private:
  std::size_t V() const noexcept { return static_cast<std::size_t>(shape_.vocab_size); }
  std::size_t start_row() const noexcept { return shape_.bigram ? V() : 0; }
  std::size_t next_row(int token) const noexcept { return shape_.bigram ? static_cast<std::size_t>(token) : 0; }

  void check(std::span<const double> params) const {
    if (params.size() != shape_.parameter_count()) {
      throw DimensionError("policy expects " + std::to_string(shape_.parameter_count()) + " parameters, got " +
                           std::to_string(params.size()));
    }
  }

  static double log_sum_exp(std::span<const double> row) {
    double m = row[0];
    for (double x : row) m = std::max(m, x);
    double s = 0.0;
    for (double x : row) s += std::exp(x - m);
    return m + std::log(s);
  }

  PolicyShape shape_;
};

inline std::string policy_param_hash(const PolicyShape& shape, std::span<const double> params) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(shape.vocab_size)).update(static_cast<std::uint64_t>(shape.bigram));
  h.update(params);
  return h.hex();
}

// Frozen policy parameters after a given curriculum iteration. Write-once: the
// parameter block is shared and const, and the digest is computed at sealing.
class PolicySnapshot {
 public:
  PolicySnapshot(int iteration, PolicyShape shape, std::vector<double> parameters)
      : iteration_(iteration),
        shape_(shape),
        parameters_(std::make_shared<const std::vector<double>>(std::move(parameters))) {
    require(iteration_ >= 0, "snapshot iteration must be non-negative");
    if (parameters_->size() != shape_.parameter_count()) throw DimensionError("snapshot parameter count mismatch");
    param_hash_ = policy_param_hash(shape_, *parameters_);
  }

  int iteration() const noexcept { return iteration_; }
  const PolicyShape& shape() const noexcept { return shape_; }
  const std::vector<double>& parameters() const noexcept { return *parameters_; }
  const std::string& param_hash() const noexcept { return param_hash_; }

 private:
  int iteration_;
  PolicyShape shape_;
  std::shared_ptr<const std::vector<double>> parameters_;
  std::string param_hash_;
};

// Binary snapshot: one JSON header line, then little-endian float64 parameters.
inline std::string encode_snapshot(const PolicySnapshot& s) {
  nlohmann::json header = {{"format", "vidsum-policy-v1"},
                           {"iteration", s.iteration()},
                           {"vocab_size", s.shape().vocab_size},
                           {"bigram", s.shape().bigram},
                           {"count", s.parameters().size()},
                           {"param_hash", s.param_hash()}};
  std::string out = header.dump() + "\n";
  for (double v : s.parameters()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  return out;
}

inline PolicySnapshot decode_snapshot(const std::string& bytes, const std::string& origin = "<memory>") {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw PersistenceError(origin, "snapshot header missing");
  const auto header = nlohmann::json::parse(bytes.substr(0, nl), nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "vidsum-policy-v1") {
    throw PersistenceError(origin, "not a policy snapshot");
  }
  const auto count = header.at("count").get<std::size_t>();
  if (bytes.size() != nl + 1 + count * 8) throw PersistenceError(origin, "snapshot payload truncated");
  std::vector<double> params(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[nl + 1 + k * 8 + static_cast<std::size_t>(i)]);
    std::memcpy(&params[k], &bits, 8);
  }
  PolicySnapshot snap(header.at("iteration").get<int>(),
                      PolicyShape{header.at("vocab_size").get<int>(), header.at("bigram").get<bool>()},
                      std::move(params));
  if (snap.param_hash() != header.at("param_hash").get<std::string>()) {
    throw PersistenceError(origin, "snapshot digest mismatch");
  }
  return snap;
}

}  // namespace vidsum::preference
