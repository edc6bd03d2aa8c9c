#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/image.hpp"

namespace vidsum {

// Longest accepted video, in seconds.
inline constexpr double max_asset_duration_s = 2400.0;

enum class Domain { business, finance, investment, economics, marketing };
enum class Tone { informative, neutral, energetic, cautious };

inline constexpr std::array<std::pair<Domain, std::string_view>, 5> domain_names{{
    {Domain::business, "Business"},
    {Domain::finance, "Finance"},
    {Domain::investment, "Investment"},
    {Domain::economics, "Economics"},
    {Domain::marketing, "Marketing"},
}};

inline constexpr std::array<std::pair<Tone, std::string_view>, 4> tone_names{{
    {Tone::informative, "Informative"},
    {Tone::neutral, "Neutral"},
    {Tone::energetic, "Energetic"},
    {Tone::cautious, "Cautious"},
}};

inline std::string_view to_string(Domain d) {
  for (const auto& [value, name] : domain_names)
    if (value == d) return name;
  return "?";
}

inline std::string_view to_string(Tone t) {
  for (const auto& [value, name] : tone_names)
    if (value == t) return name;
  return "?";
}

inline std::optional<Domain> parse_domain(std::string_view s) {
  for (const auto& [value, name] : domain_names)
    if (name == s) return value;
  return std::nullopt;
}

inline std::optional<Tone> parse_tone(std::string_view s) {
  for (const auto& [value, name] : tone_names)
    if (name == s) return value;
  return std::nullopt;
}

struct VideoAsset {
  std::string id;
  std::string source_uri;
  Domain domain = Domain::finance;
  Tone tone = Tone::informative;
  double duration_s = 0.0;

  friend bool operator==(const VideoAsset&, const VideoAsset&) = default;
};

struct DatasetManifest {
  std::vector<VideoAsset> assets;

  const VideoAsset* find(std::string_view id) const {
    for (const auto& a : assets)
      if (a.id == id) return &a;
    return nullptr;
  }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct TimedFrame {
  double timestamp_s = 0.0;
  Image image;

  friend bool operator==(const TimedFrame&, const TimedFrame&) = default;
};

// Frames sampled at a fixed rate. Timestamps strictly increase and every frame
// has the same shape.
class FrameSequence {
 public:
  FrameSequence() = default;

  FrameSequence(std::string asset_id, double sample_rate_fps, std::vector<TimedFrame> frames)
      : asset_id_(std::move(asset_id)), sample_rate_fps_(sample_rate_fps), frames_(std::move(frames)) {
    require(sample_rate_fps_ > 0.0, "sample_rate_fps must be positive");
    for (std::size_t i = 1; i < frames_.size(); ++i) {
      if (!(frames_[i].timestamp_s > frames_[i - 1].timestamp_s)) {
        throw ValidationError("frame timestamps must be strictly increasing (frame " + std::to_string(i) + ")");
      }
      if (!frames_[i].image.same_shape(frames_[0].image)) {
        throw DimensionError("frame " + std::to_string(i) + " shape differs from frame 0");
      }
    }
  }

  const std::string& asset_id() const noexcept { return asset_id_; }
  double sample_rate_fps() const noexcept { return sample_rate_fps_; }
  const std::vector<TimedFrame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  const TimedFrame& operator[](std::size_t i) const { return frames_[i]; }

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;

 private:
  std::string asset_id_;
  double sample_rate_fps_ = 1.0;
  std::vector<TimedFrame> frames_;
};

// Mono PCM, always non-empty.
class AudioTrack {
 public:
  AudioTrack(std::string asset_id, std::vector<std::int16_t> samples, int sample_rate_hz)
      : asset_id_(std::move(asset_id)), samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    require(sample_rate_hz_ > 0, "sample_rate_hz must be positive");
    if (samples_.empty()) throw DecodeError("audio track for '" + asset_id_ + "' is empty");
  }

  const std::string& asset_id() const noexcept { return asset_id_; }
  const std::vector<std::int16_t>& samples() const noexcept { return samples_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double duration_s() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  friend bool operator==(const AudioTrack&, const AudioTrack&) = default;

 private:
  std::string asset_id_;
  std::vector<std::int16_t> samples_;
  int sample_rate_hz_;
};

inline void to_json(nlohmann::json& j, const VideoAsset& a) {
  j = nlohmann::json{{"id", a.id},
                     {"source_uri", a.source_uri},
                     {"domain", std::string(to_string(a.domain))},
                     {"tone", std::string(to_string(a.tone))},
                     {"duration_s", a.duration_s}};
}

}  // namespace vidsum
