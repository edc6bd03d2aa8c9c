#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/assets/types.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/keyframes/flow.hpp"

namespace vidsum::keyframes {

inline constexpr int default_keyframe_budget = 16;

struct FlowScore {
  std::size_t frame_index = 0;
  double timestamp_s = 0.0;
  double magnitude = 0.0;

  friend bool operator==(const FlowScore&, const FlowScore&) = default;
};

struct KeyframeSet {
  std::string asset_id;
  std::vector<FlowScore> selected;  // sorted by timestamp
  int budget_m = default_keyframe_budget;

  friend bool operator==(const KeyframeSet&, const KeyframeSet&) = default;
};

class InsufficientFramesError : public ValidationError {
 public:
  explicit InsufficientFramesError(std::size_t n)
      : ValidationError("keyframe selection needs at least 2 frames, got " + std::to_string(n)) {}
};

// One score per consecutive pair (i-1, i), attributed to frame i.
inline std::vector<FlowScore> score_sequence(const FrameSequence& seq, const FlowEstimator& estimator) {
  if (seq.size() < 2) throw InsufficientFramesError(seq.size());
  std::vector<FlowScore> scores;
  scores.reserve(seq.size() - 1);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    scores.push_back({i, seq[i].timestamp_s, flow_magnitude(seq[i - 1].image, seq[i].image, estimator)});
  }
  return scores;
}

// The m highest-motion frames (earlier timestamp wins ties), returned in time order.
// A budget above the number of scoreable frames returns all of them.
inline KeyframeSet select_from_scores(std::string asset_id, std::vector<FlowScore> scores, int m) {
  require(m > 0, "keyframe budget m must be positive");
  std::stable_sort(scores.begin(), scores.end(), [](const FlowScore& a, const FlowScore& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.timestamp_s < b.timestamp_s;
  });
  if (scores.size() > static_cast<std::size_t>(m)) scores.resize(static_cast<std::size_t>(m));
  std::sort(scores.begin(), scores.end(),
            [](const FlowScore& a, const FlowScore& b) { return a.timestamp_s < b.timestamp_s; });
  return {std::move(asset_id), std::move(scores), m};
}

inline KeyframeSet select_keyframes(const FrameSequence& seq, int m, const FlowEstimator& estimator) {
  require(m > 0, "keyframe budget m must be positive");
  return select_from_scores(seq.asset_id(), score_sequence(seq, estimator), m);
}

inline void to_json(nlohmann::json& j, const FlowScore& s) {
  j = {{"frame_index", s.frame_index}, {"timestamp_s", s.timestamp_s}, {"magnitude", s.magnitude}};
}
inline void from_json(const nlohmann::json& j, FlowScore& s) {
  s.frame_index = j.at("frame_index").get<std::size_t>();
  s.timestamp_s = j.at("timestamp_s").get<double>();
  s.magnitude = j.at("magnitude").get<double>();
}
inline void to_json(nlohmann::json& j, const KeyframeSet& k) {
  j = {{"asset_id", k.asset_id}, {"budget_m", k.budget_m}, {"selected", k.selected}};
}
inline void from_json(const nlohmann::json& j, KeyframeSet& k) {
  k.asset_id = j.at("asset_id").get<std::string>();
  k.budget_m = j.at("budget_m").get<int>();
  k.selected = j.at("selected").get<std::vector<FlowScore>>();
}

}  // namespace vidsum::keyframes
