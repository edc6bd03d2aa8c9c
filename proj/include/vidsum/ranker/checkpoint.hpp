#pragma once

#include <cstring>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/io.hpp"
#include "vidsum/ranker/model.hpp"

namespace vidsum::ranker {

inline constexpr const char* checkpoint_format = "vidsum-ranker-v1";

// Header line: JSON with config, tensor manifest (name, rows, cols) and param
// hash. Payload: every tensor in manifest order, row-major little-endian f64.
inline std::string encode_checkpoint(const RankerModel& model) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  model.params.visit([&](const std::string& name, const Mat& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) payload.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
      }
    }
  });
  const nlohmann::json header = {{"format", checkpoint_format},
                                 {"config", model.config},
                                 {"tensors", tensors},
                                 {"param_hash", model.param_hash()}};
  return header.dump() + "\n" + payload;
}

inline RankerModel decode_checkpoint(const std::string& bytes, const std::string& origin = "<memory>") {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw PersistenceError(origin, "checkpoint header missing");
  const auto header = nlohmann::json::parse(bytes.substr(0, nl), nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != checkpoint_format) {
    throw PersistenceError(origin, "not a ranker checkpoint");
  }
  RankerModel model{header.at("config").get<RankerConfig>(), {}};
  model.config.validate();
  // Build the expected layout, then fill it.
  model.params = init_ranker(model.config, 0).params;
  const auto& manifest = header.at("tensors");
  std::size_t t = 0;
  std::size_t offset = nl + 1;
  model.params.visit([&](const std::string& name, Mat& m) {
    if (t >= manifest.size()) throw PersistenceError(origin, "checkpoint manifest is missing tensor " + name);
    const auto& entry = manifest[t++];
    if (entry.at("name").get<std::string>() != name || entry.at("rows").get<Eigen::Index>() != m.rows() ||
        entry.at("cols").get<Eigen::Index>() != m.cols()) {
      throw PersistenceError(origin, "checkpoint tensor " + name + " does not match the configured shape");
    }
    const auto need = static_cast<std::size_t>(m.size()) * 8;
    if (offset + need > bytes.size()) throw PersistenceError(origin, "checkpoint payload truncated at " + name);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
        double v;
        std::memcpy(&v, &bits, 8);
        m(r, c) = v;
        offset += 8;
      }
    }
  });
  if (t != manifest.size() || offset != bytes.size()) throw PersistenceError(origin, "checkpoint has trailing data");
  if (model.param_hash() != header.at("param_hash").get<std::string>()) {
    throw PersistenceError(origin, "checkpoint digest mismatch");
  }
  return model;
}

inline void save_checkpoint(const RankerModel& model, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(model));
}

inline RankerModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace vidsum::ranker
