#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vidsum/bos/prompt.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/keyframes/select.hpp"
#include "vidsum/preference/policy.hpp"
#include "vidsum/preference/training.hpp"
#include "vidsum/ranker/model.hpp"
#include "vidsum/ranker/train.hpp"

namespace vidsum::pipeline {

inline constexpr std::array<std::string_view, 10> backend_roles{
    "flow",      "ocr",   "caption",        "asr",           "diarization",
    "generator", "judge", "image-embedder", "text-embedder", "token-embedder"};

struct Hyperparameters {
  double beta = preference::default_beta;
  double lambda = 0.1;
  int k = 3;                                  // frames per summary
  int m = keyframes::default_keyframe_budget;  // keyframes per video
  int l = bos::default_max_summary_len;       // summary length cap, tokens
  double fps = 1.0;
};

struct GenerationSettings {
  int candidates = preference::default_candidate_count;
  double temperature = 0.7;
  double fact_gate = 0.0;  // drop pairs whose chosen text scores below this
};

struct PolicySettings {
  int vocab_size = preference::default_policy_vocab;
  bool bigram = true;
  int stages = preference::default_candidate_count - 1;
  double learning_rate = 1.0;
  int batch_size = 4;
  int epochs = 1;
};

struct RankerSettings {
  ranker::RankerConfig model;  // lambda comes from the hyperparameters
  int epochs = 10;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  std::string labels;       // optional JSONL of {id, gold_frames}; weak labels otherwise
  std::string checkpoint;   // optional: load instead of training
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string template_version{bos::prompt_template_version};
  std::map<std::string, std::string> backends;
  Hyperparameters hyper;
  GenerationSettings generation;
  PolicySettings policy;
  RankerSettings ranker;
  std::string manifest;  // ingest input
  std::string refs;      // evaluate input

  RunConfig() {
    for (auto role : backend_roles) backends[std::string(role)] = role == "flow" ? "proxy" : "mock";
  }

  void validate() const {
    for (auto role : backend_roles) {
      const auto it = backends.find(std::string(role));
      if (it == backends.end() || it->second.empty()) {
        throw ValidationError("backend role '" + std::string(role) + "' is not bound");
      }
    }
    for (const auto& [role, binding] : backends) {
      bool known = false;
      for (auto r : backend_roles) known = known || r == role;
      if (!known) throw ValidationError("unknown backend role '" + role + "'");
    }
    if (template_version != bos::prompt_template_version) {
      throw ValidationError("unsupported template_version '" + template_version + "' (this build renders " +
                            std::string(bos::prompt_template_version) + ")");
    }
    auto positive = [](bool ok, const char* what) {
      if (!ok) throw ValidationError(std::string(what));
    };
    positive(hyper.beta > 0.0 && std::isfinite(hyper.beta), "beta must be positive");
    positive(hyper.lambda >= 0.0 && std::isfinite(hyper.lambda), "lambda must be non-negative");
    positive(hyper.k >= 1, "k must be at least 1");
    positive(hyper.m >= 1, "m must be at least 1");
    positive(hyper.l >= 1, "l must be at least 1");
    positive(hyper.fps > 0.0 && std::isfinite(hyper.fps), "fps must be positive");
    positive(generation.candidates >= 2, "need at least 2 candidates");
    positive(generation.temperature >= 0.0, "temperature must be non-negative");
    positive(policy.stages >= 1 && policy.stages <= generation.candidates - 1,
             "policy stages must be between 1 and candidates - 1");
    positive(policy.vocab_size >= 2, "policy vocab_size must be at least 2");
    positive(policy.learning_rate > 0.0, "policy learning_rate must be positive");
    positive(policy.batch_size >= 1, "policy batch_size must be positive");
    positive(policy.epochs >= 0, "policy epochs must be non-negative");
    positive(ranker.epochs >= 0, "ranker epochs must be non-negative");
    positive(ranker.learning_rate > 0.0, "ranker learning_rate must be positive");
    positive(ranker.optimizer == "adam" || ranker.optimizer == "sgd", "ranker optimizer must be adam or sgd");
    try {
      ranker_model().validate();
    } catch (const ContractError& e) {
      throw ValidationError(e.what());
    }
  }

  ranker::RankerConfig ranker_model() const {
    auto c = ranker.model;
    c.lambda = hyper.lambda;
    return c;
  }

  ranker::TrainConfig ranker_training(std::uint64_t stage_seed) const {
    ranker::TrainConfig t;
    t.epochs = ranker.epochs;
    t.learning_rate = ranker.learning_rate;
    t.optimizer = ranker.optimizer == "sgd" ? ranker::Optimizer::sgd : ranker::Optimizer::adam;
    t.seed = stage_seed;
    return t;
  }
};

inline nlohmann::json to_json_value(const RunConfig& c) {
  nlohmann::json rm = c.ranker.model;
  rm.erase("lambda");
  return {{"seed", c.seed},
          {"template_version", c.template_version},
          {"backends", c.backends},
          {"hyperparameters",
           {{"beta", c.hyper.beta},
            {"lambda", c.hyper.lambda},
            {"k", c.hyper.k},
            {"m", c.hyper.m},
            {"l", c.hyper.l},
            {"fps", c.hyper.fps}}},
          {"generation",
           {{"candidates", c.generation.candidates},
            {"temperature", c.generation.temperature},
            {"fact_gate", c.generation.fact_gate}}},
          {"policy",
           {{"vocab_size", c.policy.vocab_size},
            {"bigram", c.policy.bigram},
            {"stages", c.policy.stages},
            {"learning_rate", c.policy.learning_rate},
            {"batch_size", c.policy.batch_size},
            {"epochs", c.policy.epochs}}},
          {"ranker",
           {{"model", rm},
            {"epochs", c.ranker.epochs},
            {"learning_rate", c.ranker.learning_rate},
            {"optimizer", c.ranker.optimizer},
            {"labels", c.ranker.labels},
            {"checkpoint", c.ranker.checkpoint}}},
          {"manifest", c.manifest},
          {"refs", c.refs}};
}

namespace detail {

// Reads `key` from `obj` into `out` if present; rejects keys not in `allowed`.
inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config section '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown config key '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config key '" + where + (where.empty() ? "" : ".") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  RunConfig c;
  detail::check_keys(j, {"seed", "template_version", "backends", "hyperparameters", "generation", "policy", "ranker",
                         "manifest", "refs"},
                     "");
  read(j, "seed", c.seed, "");
  read(j, "template_version", c.template_version, "");
  read(j, "manifest", c.manifest, "");
  read(j, "refs", c.refs, "");
  if (j.contains("backends")) {
    const auto& b = j["backends"];
    if (!b.is_object()) throw ValidationError("config section 'backends' must be an object");
    for (const auto& [role, binding] : b.items()) {
      if (!binding.is_string()) throw ValidationError("backend binding for '" + role + "' must be a string");
      c.backends[role] = binding.get<std::string>();
    }
  }
  if (j.contains("hyperparameters")) {
    const auto& h = j["hyperparameters"];
    detail::check_keys(h, {"beta", "lambda", "k", "m", "l", "fps"}, "hyperparameters");
    read(h, "beta", c.hyper.beta, "hyperparameters");
    read(h, "lambda", c.hyper.lambda, "hyperparameters");
    read(h, "k", c.hyper.k, "hyperparameters");
    read(h, "m", c.hyper.m, "hyperparameters");
    read(h, "l", c.hyper.l, "hyperparameters");
    read(h, "fps", c.hyper.fps, "hyperparameters");
  }
  if (j.contains("generation")) {
    const auto& g = j["generation"];
    detail::check_keys(g, {"candidates", "temperature", "fact_gate"}, "generation");
    read(g, "candidates", c.generation.candidates, "generation");
    read(g, "temperature", c.generation.temperature, "generation");
    read(g, "fact_gate", c.generation.fact_gate, "generation");
  }
  if (j.contains("policy")) {
    const auto& p = j["policy"];
    detail::check_keys(p, {"vocab_size", "bigram", "stages", "learning_rate", "batch_size", "epochs"}, "policy");
    read(p, "vocab_size", c.policy.vocab_size, "policy");
    read(p, "bigram", c.policy.bigram, "policy");
    read(p, "stages", c.policy.stages, "policy");
    read(p, "learning_rate", c.policy.learning_rate, "policy");
    read(p, "batch_size", c.policy.batch_size, "policy");
    read(p, "epochs", c.policy.epochs, "policy");
  }
  if (j.contains("ranker")) {
    const auto& r = j["ranker"];
    detail::check_keys(r, {"model", "epochs", "learning_rate", "optimizer", "labels", "checkpoint"}, "ranker");
    if (r.contains("model")) {
      detail::check_keys(r["model"],
                         {"image_dim", "text_dim", "width", "layers", "heads", "ffn_width", "max_frames", "positional"},
                         "ranker.model");
      try {
        c.ranker.model = r["model"].get<ranker::RankerConfig>();
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("config section 'ranker.model' has a value of the wrong type");
      }
    }
    read(r, "epochs", c.ranker.epochs, "ranker");
    read(r, "learning_rate", c.ranker.learning_rate, "ranker");
    read(r, "optimizer", c.ranker.optimizer, "ranker");
    read(r, "labels", c.ranker.labels, "ranker");
    read(r, "checkpoint", c.ranker.checkpoint, "ranker");
  }
  c.validate();
  return c;
}

inline std::string serialize_config(const RunConfig& c) { return to_json_value(c).dump(2) + "\n"; }

inline RunConfig parse_config(std::string_view text, const std::string& origin = "<config>") {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(origin + " is not valid JSON");
  return config_from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file " + path.string() + " does not exist");
  return parse_config(read_file(path), path.string());
}

// Digest of the canonical serialization; key order in the source file is
// irrelevant because objects serialize with sorted keys.
inline std::string config_hash(const RunConfig& c) { return Fnv1a{}.update(serialize_config(c)).hex(); }

// "role=binding" from the command line.
inline void apply_backend_override(RunConfig& c, std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ValidationError("backend override must look like role=binding, got '" + std::string(spec) + "'");
  }
  const std::string role(spec.substr(0, eq));
  bool known = false;
  for (auto r : backend_roles) known = known || r == role;
  if (!known) throw ValidationError("unknown backend role '" + role + "'");
  c.backends[role] = std::string(spec.substr(eq + 1));
}

}  // namespace vidsum::pipeline
