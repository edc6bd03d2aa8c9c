#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/assets/artifacts.hpp"
#include "vidsum/assets/manifest.hpp"
#include "vidsum/assets/media.hpp"
#include "vidsum/bos/backends.hpp"
#include "vidsum/bos/description.hpp"
#include "vidsum/bos/prompt.hpp"
#include "vidsum/bos/transcript.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/keyframes/select.hpp"
#include "vidsum/metrics/image.hpp"
#include "vidsum/metrics/selection.hpp"
#include "vidsum/metrics/text.hpp"
#include "vidsum/pipeline/backends.hpp"
#include "vidsum/pipeline/config.hpp"
#include "vidsum/preference/candidates.hpp"
#include "vidsum/preference/fact_score.hpp"
#include "vidsum/preference/policy.hpp"
#include "vidsum/preference/training.hpp"
#include "vidsum/ranker/checkpoint.hpp"
#include "vidsum/ranker/embedders.hpp"
#include "vidsum/ranker/network.hpp"
#include "vidsum/ranker/select.hpp"
#include "vidsum/ranker/train.hpp"

namespace vidsum::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

inline const std::vector<Stage>& upstream_of(Stage s) {
  static const std::map<Stage, std::vector<Stage>> dag = {
      {Stage::ingest, {}},
      {Stage::frames, {Stage::ingest}},
      {Stage::bos, {Stage::ingest, Stage::frames}},
      {Stage::generate, {Stage::bos}},
      {Stage::train_dpo, {Stage::generate}},
      {Stage::rank, {Stage::ingest, Stage::frames, Stage::bos, Stage::train_dpo}},
      {Stage::evaluate, {Stage::ingest, Stage::bos, Stage::train_dpo, Stage::rank}},
      {Stage::report, {Stage::ingest, Stage::train_dpo, Stage::rank}},
  };
  return dag.at(s);
}

inline constexpr const char* stage_report_name = "stage_report";

struct AssetStatus {
  std::string id;
  std::string status;  // ok | degraded | failed | skipped
  std::string detail;
  std::string error_kind;  // set when failed
};

struct StageReport {
  Stage stage = Stage::ingest;
  std::string status;  // ok | degraded | partial | failed
  std::string stage_hash;
  json settings;
  std::map<std::string, std::string> upstream;  // stage name -> stage hash
  std::vector<AssetStatus> assets;
  std::string error;
  bool cached = false;      // not persisted
  double wall_time_s = 0.0;  // not persisted
};

inline json to_json_value(const StageReport& r) {
  json assets = json::array();
  for (const auto& a : r.assets) {
    json e = {{"id", a.id}, {"status", a.status}, {"detail", a.detail}};
    if (!a.error_kind.empty()) e["error_kind"] = a.error_kind;
    assets.push_back(e);
  }
  json j = {{"stage", std::string(to_string(r.stage))},
            {"status", r.status},
            {"config_hash", r.stage_hash},
            {"settings", r.settings},
            {"upstream", r.upstream},
            {"assets", assets}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline StageReport report_from_json(const json& j) {
  StageReport r;
  r.stage = parse_stage(j.at("stage").get<std::string>()).value();
  r.status = j.at("status").get<std::string>();
  r.stage_hash = j.at("config_hash").get<std::string>();
  r.settings = j.at("settings");
  r.upstream = j.at("upstream").get<std::map<std::string, std::string>>();
  for (const auto& a : j.at("assets")) {
    r.assets.push_back({a.at("id").get<std::string>(), a.at("status").get<std::string>(),
                        a.at("detail").get<std::string>(), a.value("error_kind", "")});
  }
  r.error = j.value("error", "");
  return r;
}

inline std::optional<StageReport> read_stage_report(const fs::path& run_dir, Stage s) {
  const auto path = stage_dir(run_dir, s) / (std::string(stage_report_name) + ".json");
  if (!fs::exists(path)) return std::nullopt;
  try {
    return report_from_json(load_json(path));
  } catch (const nlohmann::json::exception&) {
    throw PersistenceError(path.string(), "stage report is malformed");
  } catch (const std::bad_optional_access&) {
    throw PersistenceError(path.string(), "stage report names an unknown stage");
  }
}

inline std::string file_digest(const std::string& path, const char* what) {
  if (path.empty()) return "";
  if (!fs::exists(path)) throw ValidationError(std::string(what) + " file " + path + " does not exist");
  return Fnv1a{}.update(read_file(path)).hex();
}

// Read access to the run directory, limited to the stages this stage declared.
class StageContext {
 public:
  StageContext(fs::path run_dir, Stage self, const RunConfig& config, int jobs)
      : run_dir_(std::move(run_dir)), self_(self), config_(config), jobs_(jobs) {}

  const RunConfig& config() const { return config_; }
  int jobs() const { return jobs_; }
  Stage stage() const { return self_; }
  const fs::path& run_dir() const { return run_dir_; }
  std::uint64_t seed() const { return derive_seed(config_.seed, to_string(self_)); }

  fs::path output() const { return stage_dir(run_dir_, self_); }

  fs::path input(Stage s) const {
    check_declared(s);
    return stage_dir(run_dir_, s);
  }

  // Assets the named upstream stage completed (ok or degraded), in manifest order.
  std::vector<std::string> live_assets(Stage s) const {
    check_declared(s);
    const auto report = read_stage_report(run_dir_, s);
    if (!report) throw DependencyError(std::string(to_string(s)), "stage report for '" + std::string(to_string(s)) + "' is missing");
    std::vector<std::string> ids;
    for (const auto& a : report->assets)
      if (a.status == "ok" || a.status == "degraded") ids.push_back(a.id);
    return ids;
  }

  json read_json(Stage s, const std::string& name) const {
    const auto path = input(s) / (name + ".json");
    if (!fs::exists(path)) {
      throw DependencyError(std::string(to_string(s)), "missing artifact " + path.string() + "; run '" +
                                                           std::string(to_string(s)) + "' first");
    }
    return load_json(path);
  }

  template <typename T>
  T read(Stage s, const std::string& name) const {
    try {
      return read_json(s, name).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw PersistenceError((input(s) / (name + ".json")).string(), std::string("malformed artifact: ") + e.what());
    }
  }

  FrameSequence frames(const std::string& asset_id) const {
    input(Stage::ingest);
    return load_frames(run_dir_, Stage::ingest, asset_id);
  }

  void write(const std::string& name, const json& value) const { persist_json(run_dir_, self_, name, value); }

 private:
  void check_declared(Stage s) const {
    if (s == self_) return;
    const auto& ups = upstream_of(self_);
    if (std::find(ups.begin(), ups.end(), s) == ups.end()) {
      throw ContractError("stage '" + std::string(to_string(self_)) + "' did not declare '" +
                          std::string(to_string(s)) + "' as an input");
    }
  }

  fs::path run_dir_;
  Stage self_;
  const RunConfig& config_;
  int jobs_;
};

namespace detail {

// Runs fn for every asset, recording per-asset status. Library errors mark the
// asset failed; anything else propagates.
template <typename F>
std::vector<AssetStatus> for_each_asset(const StageContext& ctx, const std::vector<std::string>& ids, F&& fn) {
  std::vector<AssetStatus> statuses(ids.size());
  parallel_for(ids.size(), ctx.jobs(), [&](std::size_t i) {
    statuses[i].id = ids[i];
    try {
      statuses[i].detail = fn(ids[i]);
      statuses[i].status = statuses[i].detail.empty() ? "ok" : "degraded";
    } catch (const Error& e) {
      statuses[i].status = "failed";
      statuses[i].detail = e.what();
      statuses[i].error_kind = std::string(to_string(e.kind()));
    }
  });
  return statuses;
}

inline json keyframes_json(const keyframes::KeyframeSet& set, const std::vector<keyframes::FlowScore>& all) {
  json j = set;
  j["scores"] = all;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage settings: the slice of the config each stage depends on.

inline json stage_settings(Stage s, const RunConfig& c, const std::optional<StageReport>& previous) {
  const auto& b = c.backends;
  switch (s) {
    case Stage::ingest: {
      std::string digest = file_digest(c.manifest, "manifest");
      if (digest.empty() && previous) digest = previous->settings.value("manifest_digest", "");
      if (digest.empty()) throw ValidationError("ingest needs a manifest (--manifest <path>)");
      return {{"fps", c.hyper.fps}, {"manifest_digest", digest}};
    }
    case Stage::frames:
      return {{"m", c.hyper.m}, {"flow", b.at("flow")}};
    case Stage::bos:
      return {{"ocr", b.at("ocr")},
              {"caption", b.at("caption")},
              {"asr", b.at("asr")},
              {"diarization", b.at("diarization")},
              {"l", c.hyper.l},
              {"template_version", c.template_version}};
    case Stage::generate:
      return {{"seed", c.seed},
              {"generator", b.at("generator")},
              {"judge", b.at("judge")},
              {"candidates", c.generation.candidates},
              {"temperature", c.generation.temperature},
              {"fact_gate", c.generation.fact_gate},
              {"l", c.hyper.l}};
    case Stage::train_dpo:
      return {{"seed", c.seed}, {"beta", c.hyper.beta}, {"policy", to_json_value(c)["policy"]}};
    case Stage::rank: {
      auto r = to_json_value(c)["ranker"];
      r.erase("labels");
      r.erase("checkpoint");
      return {{"seed", c.seed},
              {"k", c.hyper.k},
              {"lambda", c.hyper.lambda},
              {"ranker", r},
              {"image_embedder", b.at("image-embedder")},
              {"text_embedder", b.at("text-embedder")},
              {"labels_digest", file_digest(c.ranker.labels, "labels")},
              {"checkpoint_digest", file_digest(c.ranker.checkpoint, "checkpoint")}};
    }
    case Stage::evaluate: {
      std::string digest = file_digest(c.refs, "references");
      if (digest.empty() && previous) digest = previous->settings.value("refs_digest", "");
      if (digest.empty()) throw ValidationError("evaluate needs reference summaries (--refs <path>)");
      return {{"refs_digest", digest}, {"token_embedder", b.at("token-embedder")}};
    }
    case Stage::report:
      return json::object();
  }
  return json::object();
}

// ---------------------------------------------------------------------------
// Stage bodies. Each returns per-asset statuses.

inline std::vector<AssetStatus> run_ingest(const StageContext& ctx, const json& settings) {
  const auto& c = ctx.config();
  DatasetManifest manifest;
  if (!c.manifest.empty()) {
    manifest = load_manifest(c.manifest);
  } else {
    throw ValidationError("ingest needs a manifest (--manifest <path>)");
  }
  (void)settings;
  write_file(ctx.output() / "manifest.jsonl", to_jsonl(manifest));
  std::vector<std::string> ids;
  for (const auto& a : manifest.assets) ids.push_back(a.id);
  return detail::for_each_asset(ctx, ids, [&](const std::string& id) -> std::string {
    const auto& asset = *manifest.find(id);
    const auto seq = sample_frames(asset, c.hyper.fps);
    persist_artifact(ctx.run_dir(), Stage::ingest, seq);
    persist_artifact(ctx.run_dir(), Stage::ingest, decode_audio(asset));
    ctx.write(id, asset);
    return "";
  });
}

inline std::vector<AssetStatus> run_frames(const StageContext& ctx) {
  const auto& c = ctx.config();
  const auto flow = make_flow(c.backends.at("flow"));
  return detail::for_each_asset(ctx, ctx.live_assets(Stage::ingest), [&](const std::string& id) -> std::string {
    const auto seq = ctx.frames(id);
    const auto scores = keyframes::score_sequence(seq, *flow);
    const auto set = keyframes::select_from_scores(id, scores, c.hyper.m);
    ctx.write(id, detail::keyframes_json(set, scores));
    return "";
  });
}

inline std::vector<AssetStatus> run_bos(const StageContext& ctx) {
  const auto& c = ctx.config();
  const auto ocr = make_ocr(c.backends.at("ocr"));
  const auto caption = make_caption(c.backends.at("caption"));
  const auto asr = make_asr(c.backends.at("asr"));
  const auto diar = make_diarization(c.backends.at("diarization"));
  return detail::for_each_asset(ctx, ctx.live_assets(Stage::frames), [&](const std::string& id) -> std::string {
    const auto keys = ctx.read<keyframes::KeyframeSet>(Stage::frames, id);
    const auto seq = ctx.frames(id);
    std::vector<bos::FrameDescription> descriptions;
    std::size_t ocr_failures = 0;
    for (const auto& k : keys.selected) {
      const auto& frame = seq[k.frame_index].image;
      std::string text;
      bool failed = false;
      try {
        text = bos::ocr_frame(frame, *ocr, k.frame_index);
      } catch (const BackendError&) {
        failed = true;
        ++ocr_failures;
      }
      descriptions.push_back(
          bos::describe_frame(k.frame_index, k.timestamp_s, text, bos::caption_frame(frame, *caption, k.frame_index), failed));
    }
    const auto audio = load_audio(ctx.run_dir(), Stage::ingest, id);
    const auto words = asr->transcribe(audio);
    const auto transcript = bos::merge_speaker_transcript(words, diar->diarize(audio));
    const auto prompt = bos::build_bos_prompt(id, descriptions, transcript, c.hyper.l);
    ctx.write(id + ".descriptions", descriptions);
    ctx.write(id + ".transcript", transcript);
    ctx.write(id + ".prompt", prompt);
    return ocr_failures ? "ocr failed on " + std::to_string(ocr_failures) + " frame(s)" : "";
  });
}

inline std::vector<AssetStatus> run_generate(const StageContext& ctx) {
  const auto& c = ctx.config();
  const auto generator = make_generator(c.backends.at("generator"));
  const auto judge = make_judge(c.backends.at("judge"));
  return detail::for_each_asset(ctx, ctx.live_assets(Stage::bos), [&](const std::string& id) -> std::string {
    const auto prompt = ctx.read<bos::BOSPrompt>(Stage::bos, id + ".prompt");
    preference::GenerationConfig gen{c.generation.temperature, derive_seed(ctx.seed(), id), c.hyper.l};
    const auto cands = preference::generate_candidates(prompt, c.generation.candidates, *generator, gen);
    const auto ranking = preference::rank_candidates(prompt, cands, *judge);
    auto pairs = preference::curriculum_pairs(ranking, cands);
    std::erase_if(pairs, [&](const preference::PreferencePair& p) {
      return preference::fact_consistency_score(p.chosen, prompt.rendered) < c.generation.fact_gate;
    });
    ctx.write(id + ".candidates", cands);
    ctx.write(id + ".ranking", ranking);
    ctx.write(id + ".pairs", pairs);
    return "";
  });
}

inline std::string snapshot_file(int iteration) { return "policy_iter_" + std::to_string(iteration) + ".bin"; }

inline std::vector<AssetStatus> run_train_dpo(const StageContext& ctx) {
  const auto& c = ctx.config();
  const auto ids = ctx.live_assets(Stage::generate);
  std::vector<preference::PreferencePair> pairs;
  std::map<std::string, preference::CandidateSet> candidates;
  for (const auto& id : ids) {
    const auto p = ctx.read<std::vector<preference::PreferencePair>>(Stage::generate, id + ".pairs");
    pairs.insert(pairs.end(), p.begin(), p.end());
    candidates.emplace(id, ctx.read<preference::CandidateSet>(Stage::generate, id + ".candidates"));
  }
  if (!ids.empty() && pairs.empty()) throw ValidationError("no preference pairs to train on");

  const preference::PolicyShape shape{c.policy.vocab_size, c.policy.bigram};
  const preference::CategoricalPolicy policy(shape);
  std::vector<preference::PolicySnapshot> snapshots{
      preference::PolicySnapshot(0, shape, policy.initial_parameters(derive_seed(ctx.seed(), "init")))};
  json index = json::array();
  index.push_back({{"iteration", 0}, {"param_hash", snapshots[0].param_hash()}, {"file", snapshot_file(0)},
                   {"reference_hash", nullptr}, {"pairs", 0}, {"loss_curve", json::array()}});
  const auto grouped = preference::pairs_by_stage(pairs);
  for (int s = 1; s <= c.policy.stages; ++s) {
    const auto it = grouped.find(s);
    const std::vector<preference::PreferencePair> empty;
    const auto& stage_pairs = it == grouped.end() ? empty : it->second;
    preference::OptimizerConfig opt{c.policy.learning_rate, c.policy.epochs, c.policy.batch_size, -1,
                                    derive_seed(ctx.seed(), "stage-" + std::to_string(s))};
    auto result = preference::modified_dpo_iteration(snapshots.back(), stage_pairs, c.hyper.beta, opt);
    index.push_back({{"iteration", s},
                     {"param_hash", result.snapshot.param_hash()},
                     {"file", snapshot_file(s)},
                     {"reference_hash", result.reference_hash},
                     {"pairs", stage_pairs.size()},
                     {"loss_curve", result.loss_curve}});
    snapshots.push_back(result.snapshot);
  }
  for (const auto& snap : snapshots) {
    write_file(ctx.output() / "snapshots" / snapshot_file(snap.iteration()), preference::encode_snapshot(snap));
  }
  ctx.write("snapshots", index);

  const auto& final_snapshot = snapshots.back();
  return detail::for_each_asset(ctx, ids, [&](const std::string& id) -> std::string {
    const auto& cands = candidates.at(id).candidates;
    const auto best = preference::select_summary(final_snapshot, cands);
    ctx.write(id + ".summary", {{"asset_id", id},
                                {"summary", cands[best]},
                                {"candidate_index", best},
                                {"iteration", final_snapshot.iteration()},
                                {"param_hash", final_snapshot.param_hash()}});
    return "";
  });
}

namespace detail {

// {id -> gold sampled-frame indices} from a JSONL file.
inline std::map<std::string, std::set<std::size_t>> load_gold_frames(const std::string& path) {
  std::map<std::string, std::set<std::size_t>> out;
  if (path.empty()) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id")) {
      throw ValidationError(path + " line " + std::to_string(n) + ": expected an object with 'id'");
    }
    auto& gold = out[j["id"].get<std::string>()];
    if (j.contains("gold_frames")) {
      for (const auto& g : j["gold_frames"]) gold.insert(g.get<std::size_t>());
    }
  }
  return out;
}

struct RankInput {
  std::string id;
  std::vector<keyframes::FlowScore> keyframes;
  ranker::RankerItem item;
  std::string label_source;
};

}  // namespace detail

inline std::vector<AssetStatus> run_rank(const StageContext& ctx) {
  const auto& c = ctx.config();
  const auto model_config = c.ranker_model();
  const auto image_embedder =
      make_image_embedder(c.backends.at("image-embedder"), derive_seed(ctx.seed(), "image"), model_config.image_dim);
  const auto text_embedder =
      make_text_embedder(c.backends.at("text-embedder"), derive_seed(ctx.seed(), "text"), model_config.text_dim);
  const auto annotated = detail::load_gold_frames(c.ranker.labels);
  const auto ids = ctx.live_assets(Stage::train_dpo);

  // Embed every asset first; embedding failures fail that asset only.
  std::vector<std::optional<detail::RankInput>> inputs(ids.size());
  auto statuses = detail::for_each_asset(ctx, ids, [&](const std::string& id) -> std::string {
    const auto summary = ctx.read_json(Stage::train_dpo, id + ".summary").at("summary").get<std::string>();
    const auto keys = ctx.read<keyframes::KeyframeSet>(Stage::frames, id);
    const auto descriptions = ctx.read<std::vector<bos::FrameDescription>>(Stage::bos, id + ".descriptions");
    if (keys.selected.empty()) throw ValidationError("asset has no keyframes to rank");
    const auto seq = ctx.frames(id);
    detail::RankInput in{id, keys.selected, {ranker::Mat(static_cast<Eigen::Index>(keys.selected.size()), model_config.image_dim),
                                             text_embedder->embed(summary), {}}, "weak"};
    for (std::size_t i = 0; i < keys.selected.size(); ++i) {
      in.item.frames.row(static_cast<Eigen::Index>(i)) = image_embedder->embed(seq[keys.selected[i].frame_index].image).transpose();
    }
    if (const auto it = annotated.find(id); it != annotated.end()) {
      for (const auto& k : keys.selected) in.item.labels.push_back(it->second.contains(k.frame_index) ? 1 : 0);
      in.label_source = "annotated";
    } else {
      std::vector<std::string> fused;
      for (const auto& d : descriptions) fused.push_back(d.fused.str());
      in.item.labels = ranker::weak_labels(fused, summary);
    }
    const auto idx = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    inputs[idx] = std::move(in);
    return "";
  });

  ranker::RankerModel model;
  json training = {{"source", "trained"}, {"items", json::array()}, {"curve", json::array()}};
  if (!c.ranker.checkpoint.empty()) {
    model = ranker::load_checkpoint(c.ranker.checkpoint);
    if (model.config.lambda != model_config.lambda || model.config.image_dim != model_config.image_dim ||
        model.config.text_dim != model_config.text_dim) {
      throw ValidationError("checkpoint " + c.ranker.checkpoint + " does not match the configured ranker dimensions");
    }
    training["source"] = "checkpoint";
  } else {
    std::vector<ranker::RankerItem> dataset;
    for (const auto& in : inputs) {
      if (!in) continue;
      const bool has_positive = std::count(in->item.labels.begin(), in->item.labels.end(), 1) > 0;
      training["items"].push_back({{"id", in->id}, {"labels", in->label_source}, {"used", has_positive}});
      if (has_positive) dataset.push_back(in->item);
    }
    if (dataset.empty()) {
      model = ranker::init_ranker(model_config, ctx.seed());
      training["source"] = "untrained (no item has a positive label)";
    } else {
      auto result = ranker::train_ranker(dataset, model_config, c.ranker_training(ctx.seed()));
      model = std::move(result.model);
      training["curve"] = ranker::curve_to_json(result.curve);
    }
  }
  training["param_hash"] = model.param_hash();
  ranker::save_checkpoint(model, ctx.output() / "ranker.ckpt");
  ctx.write("training", training);

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!inputs[i]) continue;
    try {
      const auto& in = *inputs[i];
      const auto pred = ranker::predict(model, in.item.frames, in.item.text);
      const auto ranked = ranker::select_top_k(pred.scores, c.hyper.k);
      json frames = json::array();
      for (auto s : ranked.selected) {
        frames.push_back({{"frame_index", in.keyframes[s].frame_index},
                          {"timestamp_s", in.keyframes[s].timestamp_s},
                          {"score", pred.scores[s]}});
      }
      json candidates = json::array();
      for (std::size_t f = 0; f < in.keyframes.size(); ++f) {
        candidates.push_back({{"frame_index", in.keyframes[f].frame_index},
                              {"timestamp_s", in.keyframes[f].timestamp_s},
                              {"score", pred.scores[f]},
                              {"label", in.item.labels[f]}});
      }
      ctx.write(in.id, {{"asset_id", in.id},
                        {"k", c.hyper.k},
                        {"clamped", ranked.clamped},
                        {"frames", frames},
                        {"candidates", candidates}});
    } catch (const Error& e) {
      statuses[i] = {ids[i], "failed", e.what(), std::string(to_string(e.kind()))};
    }
  }
  return statuses;
}

struct ReferenceRecord {
  std::string id;
  std::string summary;
  std::set<std::size_t> gold_frames;
  std::vector<metrics::Vote> votes;
};

inline std::map<std::string, ReferenceRecord> load_references(const std::string& path) {
  std::map<std::string, ReferenceRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = json::parse(line, nullptr, false);
    const auto where = path + " line " + std::to_string(n);
    if (j.is_discarded() || !j.is_object()) throw ValidationError(where + ": not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw ValidationError(where + ": missing string 'id'");
    if (!j.contains("summary") || !j["summary"].is_string()) throw ValidationError(where + ": missing string 'summary'");
    ReferenceRecord r{j["id"].get<std::string>(), j["summary"].get<std::string>(), {}, {}};
    try {
      if (j.contains("gold_frames")) r.gold_frames = j["gold_frames"].get<std::set<std::size_t>>();
      if (j.contains("votes")) {
        for (const auto& v : j["votes"]) r.votes.push_back(metrics::parse_vote(v.get<std::string>()));
      }
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(where + ": gold_frames must be indices and votes strings");
    }
    if (out.contains(r.id)) throw ValidationError(where + ": duplicate id '" + r.id + "'");
    out.emplace(r.id, std::move(r));
  }
  return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace detail

inline std::vector<AssetStatus> run_evaluate(const StageContext& ctx) {
  const auto& c = ctx.config();
  if (c.refs.empty()) throw ValidationError("evaluate needs reference summaries (--refs <path>)");
  const auto refs = load_references(c.refs);
  const auto embedder = make_token_embedder(c.backends.at("token-embedder"));
  const auto ids = ctx.live_assets(Stage::rank);
  std::vector<json> rows(ids.size());

  auto statuses = detail::for_each_asset(ctx, ids, [&](const std::string& id) -> std::string {
    const auto it = refs.find(id);
    if (it == refs.end()) throw ValidationError("no reference summary for asset '" + id + "'");
    const auto& ref = it->second;
    const auto summary = ctx.read_json(Stage::train_dpo, id + ".summary").at("summary").get<std::string>();
    const auto prompt = ctx.read<bos::BOSPrompt>(Stage::bos, id + ".prompt");
    const auto ranked = ctx.read_json(Stage::rank, id);
    const auto cand = text::tokenize(summary);
    const auto gold = text::tokenize(ref.summary);
    json text = json::object();
    for (int n = 1; n <= 2; ++n) {
      const auto s = metrics::rouge_n(cand, gold, n);
      text[s.metric] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    }
    const auto rl = metrics::rouge_l(cand, gold);
    text["ROUGE-L"] = {{"precision", rl.precision}, {"recall", rl.recall}, {"f1", rl.f1}};
    const auto b = metrics::bleu(cand, gold, 4);
    for (int n = 1; n <= 4; ++n) text["BLEU-" + std::to_string(n)] = b[static_cast<std::size_t>(n - 1)];
    const auto emb = metrics::embedding_f1(cand, gold, *embedder);
    text["EMB-F1"] = {{"precision", emb.precision}, {"recall", emb.recall}, {"f1", emb.f1}};

    std::set<std::size_t> selected;
    for (const auto& f : ranked.at("frames")) selected.insert(f.at("frame_index").get<std::size_t>());
    json frames = {{"f1", metrics::frame_selection_f1(selected, ref.gold_frames)}, {"rmse", nullptr}, {"ssim", nullptr}};
    if (!ref.gold_frames.empty() && !selected.empty()) {
      const auto seq = ctx.frames(id);
      double rmse = 0.0, ssim = 0.0;
      for (auto s : selected) {
        if (s >= seq.size()) throw ValidationError("selected frame index out of range");
        double best_rmse = std::numeric_limits<double>::infinity();
        double best_ssim = -std::numeric_limits<double>::infinity();
        for (auto g : ref.gold_frames) {
          if (g >= seq.size()) throw ValidationError("gold frame " + std::to_string(g) + " is out of range");
          best_rmse = std::min(best_rmse, metrics::rmse_image(seq[s].image, seq[g].image));
          best_ssim = std::max(best_ssim, metrics::ssim_image(seq[s].image, seq[g].image));
        }
        rmse += best_rmse / static_cast<double>(selected.size());
        ssim += best_ssim / static_cast<double>(selected.size());
      }
      frames["rmse"] = rmse;
      frames["ssim"] = ssim;
    }
    json row = {{"asset_id", id},
                {"text", text},
                {"frames", frames},
                {"fact_consistency", preference::fact_consistency_score(summary, prompt.rendered)}};
    if (!ref.votes.empty()) row["tie_discounted_accuracy"] = metrics::tie_discounted_accuracy(ref.votes);
    ctx.write(id, row);
    rows[static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin())] = row;
    return "";
  });

  // Aggregate tables over the assets that scored.
  const std::vector<std::string> columns = {"ROUGE-1", "ROUGE-2", "ROUGE-L", "BLEU-1", "BLEU-2", "BLEU-3",
                                            "BLEU-4",  "EMB-F1",  "frame_f1", "rmse",  "ssim",   "fact"};
  auto cell = [](const json& row, const std::string& col) -> std::optional<double> {
    if (col == "frame_f1") return row["frames"]["f1"].get<double>();
    if (col == "rmse" || col == "ssim") {
      const auto& v = row["frames"][col];
      return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    }
    if (col == "fact") return row["fact_consistency"].get<double>();
    const auto& v = row["text"][col];
    return v.is_object() ? v["f1"].get<double>() : v.get<double>();
  };
  std::string csv = "asset_id";
  std::string txt = "asset";
  for (const auto& col : columns) {
    csv += "," + col;
    txt += "\t" + col;
  }
  csv += "\n";
  txt += "\n";
  std::map<std::string, std::pair<double, int>> sums;
  std::vector<metrics::Vote> all_votes;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (statuses[i].status == "failed") continue;
    csv += ids[i];
    txt += ids[i];
    for (const auto& col : columns) {
      const auto v = cell(rows[i], col);
      csv += "," + (v ? detail::fixed(*v, 6) : std::string());
      txt += "\t" + (v ? detail::fixed(*v) : std::string("-"));
      if (v) {
        sums[col].first += *v;
        sums[col].second += 1;
      }
    }
    csv += "\n";
    txt += "\n";
    if (const auto it = refs.find(ids[i]); it != refs.end()) {
      all_votes.insert(all_votes.end(), it->second.votes.begin(), it->second.votes.end());
    }
  }
  json aggregate = {{"assets_scored", 0}, {"mean", json::object()}};
  txt += "mean";
  for (const auto& col : columns) {
    const auto it = sums.find(col);
    if (it == sums.end()) {
      txt += "\t-";
      continue;
    }
    const double mean = it->second.first / it->second.second;
    aggregate["mean"][col] = mean;
    txt += "\t" + detail::fixed(mean);
  }
  txt += "\n";
  std::size_t scored = 0;
  for (const auto& s : statuses) scored += s.status != "failed";
  aggregate["assets_scored"] = scored;
  if (!all_votes.empty()) {
    const double acc = metrics::tie_discounted_accuracy(all_votes);
    aggregate["tie_discounted_accuracy"] = acc;
    txt += "tie-discounted accuracy\t" + detail::fixed(acc) + "\n";
  }
  write_file(ctx.output() / "scores.csv", csv);
  write_file(ctx.output() / "report.txt", txt);
  ctx.write("aggregate", aggregate);
  return statuses;
}

}  // namespace vidsum::pipeline
