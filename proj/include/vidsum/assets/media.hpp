#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/assets/types.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/core/wav.hpp"

namespace vidsum {

// Audio handed to transcription backends is always mono at this rate.
inline constexpr int pipeline_audio_rate_hz = 16000;

inline constexpr double default_sample_fps = 1.0;

class EmptyAssetError : public DecodeError {
 public:
  explicit EmptyAssetError(const std::string& asset_id)
      : DecodeError("asset '" + asset_id + "' decoded to zero frames") {}
};

struct MediaInfo {
  double duration_s = 0.0;
  double native_fps = 0.0;
  std::size_t native_frame_count = 0;
  int width = 0;
  int height = 0;
};

class MediaSource {
 public:
  virtual ~MediaSource() = default;
  virtual MediaInfo probe() const = 0;
  virtual Image frame_at(double t_s) const = 0;
  virtual PcmAudio audio() const = 0;
};

// Splits "key=value&key=value" (also accepts ';') into a map.
inline std::map<std::string, std::string> parse_uri_params(std::string_view params) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i <= params.size()) {
    const auto end = std::min(params.find_first_of("&;", i), params.size());
    const auto item = params.substr(i, end - i);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        out[std::string(item)] = "";
      } else {
        out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      }
    }
    i = end + 1;
  }
  return out;
}

// Procedurally generated stand-in for a talking-head advisory video: scenes of
// chart bars and a presenter block, a drifting marker inside each scene, hard
// cuts between scenes, and an audio track of alternating speaker tones.
class SyntheticVideo final : public MediaSource {
 public:
  struct Scene {
    double start_s;
    std::array<std::uint8_t, 3> background;
    std::array<std::uint8_t, 3> accent;
    std::vector<int> bar_heights;
    int presenter_x;
  };

  struct Turn {
    double start_s;
    double end_s;
    double frequency_hz;
  };

  SyntheticVideo(std::uint64_t seed, double duration_s, int width = 64, int height = 48, double native_fps = 10.0)
      : seed_(seed), duration_s_(duration_s), width_(width), height_(height), native_fps_(native_fps) {
    require(width_ >= 16 && height_ >= 16, "synthetic video must be at least 16x16");
    require(native_fps_ > 0.0, "synthetic video fps must be positive");
    Rng rng(derive_seed(seed_, "scenes"));
    for (double t = 0.0; t < std::max(duration_s_, 1e-9);) {
      Scene s;
      s.start_s = t;
      s.background = {static_cast<std::uint8_t>(rng.below(80)), static_cast<std::uint8_t>(rng.below(80)),
                      static_cast<std::uint8_t>(rng.below(80))};
      s.accent = {static_cast<std::uint8_t>(150 + rng.below(100)), static_cast<std::uint8_t>(150 + rng.below(100)),
                  static_cast<std::uint8_t>(150 + rng.below(100))};
      const auto bars = 3 + rng.below(3);
      for (std::uint64_t b = 0; b < bars; ++b)
        s.bar_heights.push_back(static_cast<int>(4 + rng.below(static_cast<std::uint64_t>(height_ / 2))));
      s.presenter_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width_ / 2)));
      scenes_.push_back(std::move(s));
      t += rng.uniform(2.0, 6.0);
    }
    Rng voice(derive_seed(seed_, "speakers"));
    static constexpr double pitches[] = {180.0, 260.0, 340.0};
    const auto speakers = 2 + voice.below(2);
    std::size_t speaker = 0;
    for (double t = 0.0; t < duration_s_;) {
      const double len = voice.uniform(3.0, 8.0);
      turns_.push_back({t, std::min(duration_s_, t + len), pitches[speaker]});
      t += len + 0.3;
      speaker = (speaker + 1 + voice.below(speakers - 1)) % speakers;
    }
  }

  MediaInfo probe() const override {
    MediaInfo info;
    info.duration_s = duration_s_;
    info.native_fps = native_fps_;
    info.native_frame_count = static_cast<std::size_t>(std::ceil(duration_s_ * native_fps_ - 1e-9));
    info.width = width_;
    info.height = height_;
    return info;
  }

  Image frame_at(double t_s) const override {
    const auto n = static_cast<long>(std::floor(t_s * native_fps_ + 1e-9));
    const double t = static_cast<double>(n) / native_fps_;
    std::size_t si = 0;
    while (si + 1 < scenes_.size() && scenes_[si + 1].start_s <= t) ++si;
    const Scene& s = scenes_[si];
    Image img(width_, height_, s.background);
    const int bar_w = std::max(2, width_ / (2 * static_cast<int>(s.bar_heights.size()) + 1));
    for (std::size_t b = 0; b < s.bar_heights.size(); ++b) {
      const int x0 = width_ / 2 + static_cast<int>(b) * bar_w * 3 / 2;
      for (int x = x0; x < std::min(width_, x0 + bar_w); ++x)
        for (int y = height_ - s.bar_heights[b]; y < height_; ++y) img.set_rgb(x, y, s.accent);
    }
    for (int y = height_ / 4; y < height_; ++y)
      for (int x = s.presenter_x; x < std::min(width_, s.presenter_x + width_ / 6); ++x)
        img.set_rgb(x, y, {200, 170, 140});
    const long local = n - static_cast<long>(std::floor(s.start_s * native_fps_));
    const int mx = static_cast<int>((local * 2) % (width_ - 4));
    for (int y = 2; y < 6; ++y)
      for (int x = mx; x < mx + 4; ++x) img.set_rgb(x, y, {255, 255, 255});
    return img;
  }

  PcmAudio audio() const override {
    PcmAudio pcm;
    pcm.channels = 1;
    pcm.sample_rate_hz = pipeline_audio_rate_hz;
    const auto count = static_cast<std::size_t>(std::llround(duration_s_ * pcm.sample_rate_hz));
    pcm.samples.assign(count, 0);
    for (const auto& turn : turns_) {
      const auto a = static_cast<std::size_t>(turn.start_s * pcm.sample_rate_hz);
      const auto b = std::min(count, static_cast<std::size_t>(turn.end_s * pcm.sample_rate_hz));
      for (std::size_t i = a; i < b; ++i) {
        const double t = static_cast<double>(i - a) / pcm.sample_rate_hz;
        pcm.samples[i] = static_cast<std::int16_t>(8000.0 * std::sin(2.0 * std::numbers::pi * turn.frequency_hz * t));
      }
    }
    return pcm;
  }

  const std::vector<Scene>& scenes() const noexcept { return scenes_; }
  const std::vector<Turn>& turns() const noexcept { return turns_; }

 private:
  std::uint64_t seed_;
  double duration_s_;
  int width_;
  int height_;
  double native_fps_;
  std::vector<Scene> scenes_;
  std::vector<Turn> turns_;
};

// A directory holding frame_000000.ppm, frame_000001.ppm, ..., a meta.json with
// {"fps": <native rate>} and optionally audio.wav.
class PpmSequence final : public MediaSource {
 public:
  explicit PpmSequence(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) throw DecodeError("media directory not found: " + dir_.string());
    std::string meta_text;
    try {
      meta_text = read_file(dir_ / "meta.json");
    } catch (const PersistenceError&) {
      throw DecodeError("missing meta.json in " + dir_.string());
    }
    auto meta = nlohmann::json::parse(meta_text, nullptr, false);
    if (meta.is_discarded() || !meta.contains("fps") || !meta["fps"].is_number() || meta["fps"].get<double>() <= 0.0) {
      throw DecodeError("meta.json needs a positive 'fps' in " + dir_.string());
    }
    fps_ = meta["fps"].get<double>();
    while (std::filesystem::exists(frame_path(count_))) ++count_;
    if (count_ > 0) first_ = read_ppm(frame_path(0));
  }

  MediaInfo probe() const override {
    MediaInfo info;
    info.native_fps = fps_;
    info.native_frame_count = count_;
    info.duration_s = static_cast<double>(count_) / fps_;
    info.width = first_.width();
    info.height = first_.height();
    return info;
  }

  Image frame_at(double t_s) const override {
    if (count_ == 0) throw DecodeError("no frames in " + dir_.string());
    const auto n = std::min(count_ - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t_s * fps_ + 1e-9))));
    return read_ppm(frame_path(n));
  }

  PcmAudio audio() const override { return read_wav(dir_ / "audio.wav"); }

 private:
  std::filesystem::path frame_path(std::size_t n) const {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.ppm", n);
    return dir_ / name;
  }

  std::filesystem::path dir_;
  double fps_ = 0.0;
  std::size_t count_ = 0;
  Image first_;
};

// Resolves an asset's source_uri. Schemes: "mock:" (synthetic, parameters
// seed/w/h/fps) and "ppmseq:<dir>". Anything else is unreadable here.
inline std::unique_ptr<MediaSource> open_media(const VideoAsset& asset) {
  const std::string_view uri = asset.source_uri;
  if (uri.starts_with("mock:")) {
    auto params = parse_uri_params(uri.substr(5));
    if (params.contains("unreadable")) throw DecodeError("mock media for '" + asset.id + "' is unreadable");
    try {
      const std::uint64_t seed = params.contains("seed") ? std::stoull(params["seed"]) : fnv1a(asset.id);
      const int w = params.contains("w") ? std::stoi(params["w"]) : 64;
      const int h = params.contains("h") ? std::stoi(params["h"]) : 48;
      const double fps = params.contains("fps") ? std::stod(params["fps"]) : 10.0;
      return std::make_unique<SyntheticVideo>(seed, asset.duration_s, w, h, fps);
    } catch (const std::logic_error&) {
      throw DecodeError("bad mock media parameters in '" + asset.source_uri + "'");
    }
  }
  if (uri.starts_with("ppmseq:")) return std::make_unique<PpmSequence>(std::filesystem::path(uri.substr(7)));
  throw DecodeError("no decoder for media uri '" + asset.source_uri + "'");
}

// Number of k >= 0 with k / fps < duration.
inline std::size_t sample_count(double duration_s, double fps) {
  if (duration_s <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(duration_s * fps - 1e-9));
}

inline FrameSequence sample_frames(const MediaSource& media, const std::string& asset_id, double fps) {
  require(fps > 0.0 && std::isfinite(fps), "fps must be positive");
  const auto info = media.probe();
  const auto count = sample_count(info.duration_s, fps);
  if (count == 0) throw EmptyAssetError(asset_id);
  std::vector<TimedFrame> frames;
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / fps;
    frames.push_back({t, media.frame_at(t)});
  }
  return FrameSequence(asset_id, fps, std::move(frames));
}

inline FrameSequence sample_frames(const VideoAsset& asset, double fps) {
  require(fps > 0.0 && std::isfinite(fps), "fps must be positive");
  return sample_frames(*open_media(asset), asset.id, fps);
}

inline AudioTrack decode_audio(const VideoAsset& asset) {
  const auto pcm = open_media(asset)->audio();
  return AudioTrack(asset.id, to_mono(pcm, pipeline_audio_rate_hz), pipeline_audio_rate_hz);
}

}  // namespace vidsum
