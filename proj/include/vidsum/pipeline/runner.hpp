#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/assets/artifacts.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/pipeline/config.hpp"
#include "vidsum/pipeline/stages.hpp"

namespace vidsum::pipeline {

struct ScoredFrame {
  std::size_t frame_index = 0;
  double timestamp_s = 0.0;
  double score = 0.0;
};

// Final text summary plus the ranked frame selection for one asset.
struct SummaryBundle {
  std::string asset_id;
  std::string summary;
  std::vector<ScoredFrame> frames;
  bool clamped = false;
};

inline nlohmann::json to_json_value(const SummaryBundle& b) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : b.frames) {
    frames.push_back({{"frame_index", f.frame_index}, {"timestamp_s", f.timestamp_s}, {"score", f.score}});
  }
  return {{"asset_id", b.asset_id}, {"summary", b.summary}, {"frames", frames}, {"clamped", b.clamped}};
}

inline SummaryBundle assemble_summary_bundle(const std::string& asset_id, const std::filesystem::path& run_dir) {
  auto artifact = [&](Stage s, const std::string& name) {
    const auto path = stage_dir(run_dir, s) / (name + ".json");
    if (!std::filesystem::exists(path)) {
      throw DependencyError(std::string(to_string(s)), "no " + std::string(to_string(s)) + " output for asset '" +
                                                           asset_id + "'; run '" + std::string(to_string(s)) +
                                                           "' first");
    }
    return load_json(path);
  };
  const auto summary = artifact(Stage::train_dpo, asset_id + ".summary");
  const auto ranked = artifact(Stage::rank, asset_id);
  try {
    SummaryBundle b{asset_id, summary.at("summary").get<std::string>(), {}, ranked.at("clamped").get<bool>()};
    for (const auto& f : ranked.at("frames")) {
      b.frames.push_back({f.at("frame_index").get<std::size_t>(), f.at("timestamp_s").get<double>(),
                          f.at("score").get<double>()});
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError((stage_dir(run_dir, Stage::rank) / (asset_id + ".json")).string(),
                           std::string("malformed stage output: ") + e.what());
  }
}

// Sequential: bundles are small and the index lists them in manifest order.
inline std::vector<AssetStatus> run_report(const StageContext& ctx) {
  std::vector<AssetStatus> statuses;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& id : ctx.live_assets(Stage::rank)) {
    try {
      const auto bundle = assemble_summary_bundle(id, ctx.run_dir());
      ctx.write(id, to_json_value(bundle));
      index.push_back(id);
      statuses.push_back({id, "ok", "", ""});
    } catch (const Error& e) {
      statuses.push_back({id, "failed", e.what(), std::string(to_string(e.kind()))});
    }
  }
  ctx.write("index", index);
  return statuses;
}

struct RunOptions {
  int jobs = 1;
  bool force = false;
};

inline std::string stage_hash(Stage s, const nlohmann::json& settings, const std::map<std::string, std::string>& upstream) {
  const nlohmann::json key = {{"stage", std::string(to_string(s))}, {"settings", settings}, {"upstream", upstream}};
  return Fnv1a{}.update(key.dump()).hex();
}

inline std::string overall_status(const std::vector<AssetStatus>& assets) {
  std::size_t failed = 0, degraded = 0;
  for (const auto& a : assets) {
    failed += a.status == "failed";
    degraded += a.status == "degraded";
  }
  if (failed > 0) return failed == assets.size() ? "failed" : "partial";
  return degraded > 0 ? "degraded" : "ok";
}

inline void write_stage_report(const std::filesystem::path& run_dir, const StageReport& r) {
  persist_json(run_dir, r.stage, stage_report_name, to_json_value(r));
}

// Executes one stage over every asset its primary upstream completed. The
// returned report carries wall time; the persisted copy does not, so reruns
// with the same config leave the run directory byte-identical.
inline StageReport run_stage(Stage stage, const RunConfig& config, const std::filesystem::path& run_dir,
                             const RunOptions& options = {}) {
  namespace fs = std::filesystem;
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  StageReport report;
  report.stage = stage;
  for (Stage u : upstream_of(stage)) {
    const auto name = std::string(to_string(u));
    const auto up = read_stage_report(run_dir, u);
    if (!up) {
      throw DependencyError(name, "stage '" + std::string(to_string(stage)) + "' needs '" + name + "'; run '" + name +
                                      "' first");
    }
    if (up->status == "failed") {
      throw DependencyError(name, "upstream stage '" + name + "' failed; rerun '" + name + "' first");
    }
    report.upstream[name] = up->stage_hash;
  }
  const auto previous = read_stage_report(run_dir, stage);
  report.settings = stage_settings(stage, config, previous);
  report.stage_hash = stage_hash(stage, report.settings, report.upstream);

  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };
  if (previous && previous->status != "failed") {
    if (previous->stage_hash == report.stage_hash) {
      auto cached = *previous;
      cached.cached = true;
      cached.wall_time_s = elapsed();
      return cached;
    }
    if (!options.force) {
      throw StaleCacheError("cached '" + std::string(to_string(stage)) + "' output was computed under config hash " +
                            previous->stage_hash + ", current is " + report.stage_hash + "; rerun with --force");
    }
  }
  fs::remove_all(stage_dir(run_dir, stage));
  fs::create_directories(stage_dir(run_dir, stage));

  StageContext ctx(run_dir, stage, config, options.jobs);
  try {
    switch (stage) {
      case Stage::ingest: report.assets = run_ingest(ctx, report.settings); break;
      case Stage::frames: report.assets = run_frames(ctx); break;
      case Stage::bos: report.assets = run_bos(ctx); break;
      case Stage::generate: report.assets = run_generate(ctx); break;
      case Stage::train_dpo: report.assets = run_train_dpo(ctx); break;
      case Stage::rank: report.assets = run_rank(ctx); break;
      case Stage::evaluate: report.assets = run_evaluate(ctx); break;
      case Stage::report: report.assets = run_report(ctx); break;
    }
  } catch (const Error& e) {
    report.status = "failed";
    report.error = e.what();
    write_stage_report(run_dir, report);
    throw;
  }
  report.status = overall_status(report.assets);
  write_stage_report(run_dir, report);
  report.wall_time_s = elapsed();
  return report;
}

// First failed asset's error kind, if any.
inline std::optional<ErrorKind> first_failure(const StageReport& r) {
  for (const auto& a : r.assets) {
    if (a.status != "failed") continue;
    for (auto k : {ErrorKind::contract, ErrorKind::validation, ErrorKind::dimension, ErrorKind::decode,
                   ErrorKind::backend, ErrorKind::numeric, ErrorKind::dependency, ErrorKind::stale_cache,
                   ErrorKind::persistence}) {
      if (to_string(k) == a.error_kind) return k;
    }
    return ErrorKind::contract;
  }
  return std::nullopt;
}

}  // namespace vidsum::pipeline
