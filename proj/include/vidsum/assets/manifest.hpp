#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "vidsum/assets/types.hpp"
#include "vidsum/core/error.hpp"

namespace vidsum {

// A manifest line that failed to parse or validate. Line numbers are 1-based.
class ManifestError : public ValidationError {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : ValidationError("manifest line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string require_string(const nlohmann::json& record, const char* key, std::size_t line) {
  if (!record.contains(key)) throw ManifestError(line, std::string("missing field '") + key + "'");
  if (!record[key].is_string()) throw ManifestError(line, std::string("field '") + key + "' must be a string");
  return record[key].get<std::string>();
}

}  // namespace detail

inline VideoAsset parse_manifest_record(std::string_view text, std::size_t line) {
  auto record = nlohmann::json::parse(text, nullptr, false);
  if (record.is_discarded()) throw ManifestError(line, "malformed JSON record");
  if (!record.is_object()) throw ManifestError(line, "record must be a JSON object");

  VideoAsset asset;
  asset.id = detail::require_string(record, "id", line);
  if (asset.id.empty()) throw ManifestError(line, "id must not be empty");
  asset.source_uri = detail::require_string(record, "source_uri", line);

  const auto domain = detail::require_string(record, "domain", line);
  if (auto d = parse_domain(domain)) {
    asset.domain = *d;
  } else {
    throw ManifestError(line, "unknown domain '" + domain + "'");
  }
  const auto tone = detail::require_string(record, "tone", line);
  if (auto t = parse_tone(tone)) {
    asset.tone = *t;
  } else {
    throw ManifestError(line, "unknown tone '" + tone + "'");
  }

  if (!record.contains("duration_s") || !record["duration_s"].is_number()) {
    throw ManifestError(line, "field 'duration_s' must be a number");
  }
  asset.duration_s = record["duration_s"].get<double>();
  if (!std::isfinite(asset.duration_s) || asset.duration_s < 0.0) {
    throw ManifestError(line, "duration_s must be a non-negative finite number");
  }
  if (asset.duration_s > max_asset_duration_s) {
    throw ManifestError(line, "duration_s " + record["duration_s"].dump() + " exceeds the 2400 s cap");
  }
  return asset;
}

// One JSON object per line. Whitespace-only lines carry no record.
inline DatasetManifest parse_manifest(std::istream& in) {
  DatasetManifest manifest;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto asset = parse_manifest_record(text, line);
    if (!seen.insert(asset.id).second) throw ManifestError(line, "duplicate id '" + asset.id + "'");
    manifest.assets.push_back(std::move(asset));
  }
  return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  return parse_manifest(in);
}

inline std::string to_jsonl(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& a : manifest.assets) {
    out += nlohmann::json(a).dump();
    out += '\n';
  }
  return out;
}

}  // namespace vidsum
