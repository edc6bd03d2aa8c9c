#pragma once

#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vidsum/pipeline/backends.hpp"
#include "vidsum/pipeline/config.hpp"
#include "vidsum/pipeline/runner.hpp"

namespace vidsum::pipeline {

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_usage = 2,
  exit_dependency = 3,
  exit_validation = 4,
  exit_backend = 5,
  exit_numeric = 6,
  exit_stale_cache = 7,
  exit_persistence = 8,
  exit_contract = 9,
  exit_dimension = 10,
  exit_decode = 11,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract: return exit_contract;
    case ErrorKind::validation: return exit_validation;
    case ErrorKind::dimension: return exit_dimension;
    case ErrorKind::decode: return exit_decode;
    case ErrorKind::backend: return exit_backend;
    case ErrorKind::numeric: return exit_numeric;
    case ErrorKind::dependency: return exit_dependency;
    case ErrorKind::stale_cache: return exit_stale_cache;
    case ErrorKind::persistence: return exit_persistence;
  }
  return exit_internal;
}

struct CliOptions {
  std::string run_dir = "run";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool force = false;
  std::vector<std::string> backends;
  std::string manifest;
  std::string refs;
  std::string labels;
  std::string checkpoint;
  std::optional<int> budget;
  std::optional<int> k;
  std::optional<int> stages;
  std::optional<int> epochs;
  std::optional<double> beta;
  std::optional<double> lambda;
  std::optional<double> fps;
  std::string estimator;
};

inline RunConfig effective_config(const CliOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  for (const auto& b : o.backends) apply_backend_override(c, b);
  if (!o.estimator.empty()) c.backends["flow"] = o.estimator;
  if (!o.manifest.empty()) c.manifest = o.manifest;
  if (!o.refs.empty()) c.refs = o.refs;
  if (!o.labels.empty()) c.ranker.labels = o.labels;
  if (!o.checkpoint.empty()) c.ranker.checkpoint = o.checkpoint;
  if (o.budget) c.hyper.m = *o.budget;
  if (o.k) c.hyper.k = *o.k;
  if (o.stages) c.policy.stages = *o.stages;
  if (o.epochs) c.ranker.epochs = *o.epochs;
  if (o.beta) c.hyper.beta = *o.beta;
  if (o.lambda) c.hyper.lambda = *o.lambda;
  if (o.fps) c.hyper.fps = *o.fps;
  c.validate();
  check_bindings(c.backends);
  return c;
}

inline void print_stage(std::ostream& out, const StageReport& r) {
  std::size_t failed = 0;
  for (const auto& a : r.assets) failed += a.status == "failed";
  out << std::left << std::setw(10) << to_string(r.stage) << r.status << (r.cached ? " (cached)" : "") << "  "
      << r.assets.size() - failed << "/" << r.assets.size() << " assets  " << std::fixed << std::setprecision(2)
      << r.wall_time_s << " s  hash " << r.stage_hash << "\n";
  for (const auto& a : r.assets) {
    if (a.status == "failed" || a.status == "degraded") out << "  " << a.id << ": " << a.status << ": " << a.detail << "\n";
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multimodal video summarization pipeline", "vidsum"};
  app.require_subcommand(1);
  app.fallthrough();
  CliOptions o;
  app.add_option("--run", o.run_dir, "Run directory")->capture_default_str();
  app.add_option("--config", o.config_path, "JSON config file");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--jobs", o.jobs, "Worker threads per stage")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--force", o.force, "Recompute stages whose cache was built under a different config");
  app.add_option("--backend", o.backends, "Backend binding, role=binding (repeatable)");
  app.add_option("--manifest", o.manifest, "Dataset manifest (JSONL)");
  app.add_option("--refs", o.refs, "Reference summaries (JSONL)");
  app.add_option("--labels", o.labels, "Gold frame labels for ranker training (JSONL)");
  app.add_option("--checkpoint", o.checkpoint, "Load a ranker checkpoint instead of training");
  app.add_option("--budget", o.budget, "Keyframes per video (m)");
  app.add_option("--k", o.k, "Frames per summary");
  app.add_option("--stages", o.stages, "Curriculum stages");
  app.add_option("--epochs", o.epochs, "Ranker training epochs");
  app.add_option("--beta", o.beta, "DPO temperature");
  app.add_option("--lambda", o.lambda, "Diversity weight");
  app.add_option("--fps", o.fps, "Frame sampling rate");
  app.add_option("--estimator", o.estimator, "Flow backend binding (shorthand for --backend flow=...)");

  std::vector<Stage> selected;
  for (Stage s : all_stages) {
    auto* sub = app.add_subcommand(std::string(to_string(s)), "Run the " + std::string(to_string(s)) + " stage");
    sub->callback([&selected, s] { selected = {s}; });
  }
  app.add_subcommand("run", "Run every stage in order")->callback([&selected] {
    selected.assign(all_stages.begin(), all_stages.end());
  });
  bool print_config = false;
  app.add_subcommand("config", "Print the effective config and its hash")->callback([&print_config] {
    print_config = true;
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "vidsum: " << e.what() << "\n" << "run 'vidsum --help' for usage\n";
    return exit_usage;
  }

  try {
    const auto config = effective_config(o);
    if (print_config) {
      out << serialize_config(config) << "config hash " << config_hash(config) << "\n";
      return exit_ok;
    }
    int code = exit_ok;
    for (Stage s : selected) {
      if (s == Stage::evaluate && selected.size() > 1 && config.refs.empty() &&
          !read_stage_report(o.run_dir, Stage::evaluate)) {
        out << std::left << std::setw(10) << "evaluate" << "skipped (no --refs)\n";
        continue;
      }
      const auto report = run_stage(s, config, o.run_dir, {o.jobs, o.force});
      print_stage(out, report);
      if (const auto kind = first_failure(report); kind && code == exit_ok) code = exit_code(*kind);
    }
    if (!selected.empty() && code == exit_ok) write_file(std::filesystem::path(o.run_dir) / "config.json", serialize_config(config));
    return code;
  } catch (const DependencyError& e) {
    err << "vidsum: " << e.what() << "\n";
    return exit_dependency;
  } catch (const Error& e) {
    err << "vidsum: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "vidsum: internal error: " << e.what() << "\n";
    return exit_internal;
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace vidsum::pipeline
