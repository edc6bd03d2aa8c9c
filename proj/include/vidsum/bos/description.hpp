#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "vidsum/core/error.hpp"

namespace vidsum::bos {

inline constexpr std::string_view fusion_separator = " | ";
inline constexpr std::string_view ocr_prefix = "On-screen text: ";

struct FrameDescription;

// Caption plus OCR text. Only fuse_description (and deserialization) can make
// one, and it is not a string, so a fused value cannot be fed back into fusion.
class FusedDescription {
 public:
  const std::string& str() const noexcept { return text_; }

  friend bool operator==(const FusedDescription&, const FusedDescription&) = default;

 private:
  explicit FusedDescription(std::string text) : text_(std::move(text)) {}

  friend FusedDescription fuse_description(std::string_view ocr_text, std::string_view caption);
  friend void from_json(const nlohmann::json& j, FrameDescription& d);

  std::string text_;
};

inline FusedDescription fuse_description(std::string_view ocr_text, std::string_view caption) {
  require(!caption.empty(), "caption must not be empty");
  std::string fused(caption);
  if (!ocr_text.empty()) {
    fused += fusion_separator;
    fused += ocr_prefix;
    fused += ocr_text;
  }
  return FusedDescription(std::move(fused));
}

struct FrameDescription {
  std::size_t frame_index = 0;
  double timestamp_s = 0.0;
  std::string ocr_text;
  std::string caption;
  FusedDescription fused = fuse_description("", "[no caption]");
  bool ocr_failed = false;

  friend bool operator==(const FrameDescription&, const FrameDescription&) = default;
};

inline FrameDescription describe_frame(std::size_t frame_index, double timestamp_s, std::string ocr_text,
                                       std::string caption, bool ocr_failed = false) {
  auto fused = fuse_description(ocr_text, caption);
  return {frame_index, timestamp_s, std::move(ocr_text), std::move(caption), std::move(fused), ocr_failed};
}

inline void to_json(nlohmann::json& j, const FusedDescription& d) { j = d.str(); }

inline void to_json(nlohmann::json& j, const FrameDescription& d) {
  j = {{"frame_index", d.frame_index}, {"timestamp_s", d.timestamp_s}, {"ocr_text", d.ocr_text},
       {"caption", d.caption},         {"fused", d.fused},             {"ocr_failed", d.ocr_failed}};
}
inline void from_json(const nlohmann::json& j, FrameDescription& d) {
  d.frame_index = j.at("frame_index").get<std::size_t>();
  d.timestamp_s = j.at("timestamp_s").get<double>();
  d.ocr_text = j.at("ocr_text").get<std::string>();
  d.caption = j.at("caption").get<std::string>();
  d.fused = FusedDescription(j.at("fused").get<std::string>());
  d.ocr_failed = j.value("ocr_failed", false);
}

}  // namespace vidsum::bos
