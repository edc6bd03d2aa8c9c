#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vidsum/assets/types.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/image.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/core/wav.hpp"

namespace vidsum {

enum class Stage { ingest, frames, bos, generate, train_dpo, rank, evaluate, report };

inline constexpr std::array<Stage, 8> all_stages{Stage::ingest,    Stage::frames, Stage::bos,
                                                 Stage::generate,  Stage::train_dpo, Stage::rank,
                                                 Stage::evaluate,  Stage::report};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::frames: return "frames";
    case Stage::bos: return "bos";
    case Stage::generate: return "generate";
    case Stage::train_dpo: return "train-dpo";
    case Stage::rank: return "rank";
    case Stage::evaluate: return "evaluate";
    case Stage::report: return "report";
  }
  return "?";
}

inline std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : all_stages)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

struct ArtifactHandle {
  std::filesystem::path path;
};

inline std::filesystem::path stage_dir(const std::filesystem::path& run_dir, Stage stage) {
  return run_dir / std::string(to_string(stage));
}

// Canonical JSON text: sorted keys (nlohmann objects are ordered maps), two-space
// indent, shortest round-trip doubles, trailing newline.
inline std::string canonical_json(const nlohmann::json& value) { return value.dump(2) + "\n"; }

inline ArtifactHandle persist_json(const std::filesystem::path& run_dir, Stage stage, std::string_view name,
                                   const nlohmann::json& value) {
  const auto path = stage_dir(run_dir, stage) / (std::string(name) + ".json");
  write_file(path, canonical_json(value));
  return {path};
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  auto value = nlohmann::json::parse(read_file(path), nullptr, false);
  if (value.is_discarded()) throw PersistenceError(path.string(), "artifact is not valid JSON");
  return value;
}

inline nlohmann::json load_json(const std::filesystem::path& run_dir, Stage stage, std::string_view name) {
  return load_json(stage_dir(run_dir, stage) / (std::string(name) + ".json"));
}

// Any JSON-serializable payload lands at <run>/<stage>/<asset_id>.json.
template <typename T>
  requires requires(nlohmann::json& j, const T& t) { to_json(j, t); }
ArtifactHandle persist_artifact(const std::filesystem::path& run_dir, Stage stage, std::string_view asset_id,
                                const T& payload) {
  return persist_json(run_dir, stage, asset_id, nlohmann::json(payload));
}

template <typename T>
T load_artifact(const std::filesystem::path& run_dir, Stage stage, std::string_view asset_id) {
  return load_json(run_dir, stage, asset_id).get<T>();
}

inline std::string frame_file_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06zu.ppm", index);
  return name;
}

// Frames go to <run>/<stage>/<asset_id>/frame_NNNNNN.ppm plus index.json
// mapping timestamps to file names. A previous tree is replaced wholesale.
inline ArtifactHandle persist_artifact(const std::filesystem::path& run_dir, Stage stage, const FrameSequence& seq) {
  const auto dir = stage_dir(run_dir, stage) / seq.asset_id();
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  nlohmann::json index;
  index["asset_id"] = seq.asset_id();
  index["sample_rate_fps"] = seq.sample_rate_fps();
  index["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto name = frame_file_name(i);
    write_file(dir / name, encode_ppm(seq[i].image));
    index["frames"].push_back({{"file", name}, {"timestamp_s", seq[i].timestamp_s}});
  }
  const auto path = dir / "index.json";
  write_file(path, canonical_json(index));
  return {path};
}

inline FrameSequence load_frames(const std::filesystem::path& run_dir, Stage stage, std::string_view asset_id) {
  const auto dir = stage_dir(run_dir, stage) / std::string(asset_id);
  const auto index = load_json(dir / "index.json");
  std::vector<TimedFrame> frames;
  for (const auto& f : index.at("frames")) {
    frames.push_back({f.at("timestamp_s").get<double>(), read_ppm(dir / f.at("file").get<std::string>())});
  }
  return FrameSequence(index.at("asset_id").get<std::string>(), index.at("sample_rate_fps").get<double>(),
                       std::move(frames));
}

inline ArtifactHandle persist_artifact(const std::filesystem::path& run_dir, Stage stage, const AudioTrack& track) {
  const auto path = stage_dir(run_dir, stage) / (track.asset_id() + ".wav");
  write_file(path, encode_wav(PcmAudio{track.samples(), 1, track.sample_rate_hz()}));
  return {path};
}

inline AudioTrack load_audio(const std::filesystem::path& run_dir, Stage stage, std::string_view asset_id) {
  const auto path = stage_dir(run_dir, stage) / (std::string(asset_id) + ".wav");
  if (!std::filesystem::exists(path)) throw PersistenceError(path.string(), "audio artifact missing");
  const auto pcm = read_wav(path);
  return AudioTrack(std::string(asset_id), pcm.samples, pcm.sample_rate_hz);
}

}  // namespace vidsum
