#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/bos/description.hpp"
#include "vidsum/bos/transcript.hpp"
#include "vidsum/core/error.hpp"

namespace vidsum::bos {

inline constexpr std::string_view prompt_template_version = "bos-v1";
inline constexpr int default_max_summary_len = 250;
inline constexpr std::string_view no_visual_content = "No salient visual content.";

struct PromptSections {
  std::string instructions;
  std::string frame_descriptions;
  std::string transcript;

  friend bool operator==(const PromptSections&, const PromptSections&) = default;
};

struct BOSPrompt {
  std::string asset_id;
  std::string template_version{prompt_template_version};
  PromptSections sections;
  std::string rendered;

  friend bool operator==(const BOSPrompt&, const BOSPrompt&) = default;
};

namespace detail {

inline std::string format_seconds(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

}  // namespace detail

// Renders instructions, numbered frame descriptions and the speaker-attributed
// transcript, always in that order. Pure in its arguments and the template version.
inline BOSPrompt build_bos_prompt(std::string asset_id, const std::vector<FrameDescription>& descriptions,
                                  const EnrichedTranscript& transcript, int max_summary_len) {
  require(!transcript.empty(), "transcript must not be empty");
  require(max_summary_len > 0, "max_summary_len must be positive");

  BOSPrompt prompt;
  prompt.asset_id = std::move(asset_id);

  prompt.sections.instructions =
      "Summarize the financial advisory video below in at most " + std::to_string(max_summary_len) +
      " tokens. Use the frame descriptions (visual captions with on-screen text) and the speaker-attributed "
      "transcript. Keep figures, names and speaker attributions faithful to the source and do not add "
      "information that is not present.";

  if (descriptions.empty()) {
    prompt.sections.frame_descriptions = std::string(no_visual_content);
  } else {
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
      const auto& d = descriptions[i];
      if (i) prompt.sections.frame_descriptions += '\n';
      prompt.sections.frame_descriptions += "[" + std::to_string(i + 1) + "] t=" +
                                            detail::format_seconds(d.timestamp_s) + "s frame " +
                                            std::to_string(d.frame_index) + ": " + d.fused.str();
    }
  }

  for (std::size_t i = 0; i < transcript.segments.size(); ++i) {
    const auto& s = transcript.segments[i];
    if (i) prompt.sections.transcript += '\n';
    prompt.sections.transcript += "[" + detail::format_seconds(s.start_s) + "-" + detail::format_seconds(s.end_s) +
                                  "] " + s.speaker_label + ": " + s.text;
  }

  prompt.rendered = "### Instructions (" + prompt.template_version + ")\n" + prompt.sections.instructions +
                    "\n\n### Frame descriptions\n" + prompt.sections.frame_descriptions +
                    "\n\n### Transcript\n" + prompt.sections.transcript + "\n\n### Summary\n";
  return prompt;
}

inline void to_json(nlohmann::json& j, const BOSPrompt& p) {
  j = {{"asset_id", p.asset_id},
       {"template_version", p.template_version},
       {"sections",
        {{"instructions", p.sections.instructions},
         {"frame_descriptions", p.sections.frame_descriptions},
         {"transcript", p.sections.transcript}}},
       {"rendered", p.rendered}};
}
inline void from_json(const nlohmann::json& j, BOSPrompt& p) {
  p.asset_id = j.at("asset_id").get<std::string>();
  p.template_version = j.at("template_version").get<std::string>();
  const auto& s = j.at("sections");
  p.sections.instructions = s.at("instructions").get<std::string>();
  p.sections.frame_descriptions = s.at("frame_descriptions").get<std::string>();
  p.sections.transcript = s.at("transcript").get<std::string>();
  p.rendered = j.at("rendered").get<std::string>();
}

}  // namespace vidsum::bos
