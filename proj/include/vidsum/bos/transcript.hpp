#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"

namespace vidsum::bos {

inline constexpr std::string_view unknown_speaker = "SPEAKER_UNK";

struct SpeakerSegment {
  std::string speaker_label;
  double start_s = 0.0;
  double end_s = 0.0;

  friend bool operator==(const SpeakerSegment&, const SpeakerSegment&) = default;
};

struct TimedWord {
  std::string token;
  double start_s = 0.0;
  double end_s = 0.0;

  double midpoint() const noexcept { return 0.5 * (start_s + end_s); }

  friend bool operator==(const TimedWord&, const TimedWord&) = default;
};

struct WordTimeline {
  std::vector<TimedWord> words;

  friend bool operator==(const WordTimeline&, const WordTimeline&) = default;
};

struct TranscriptSegment {
  std::string speaker_label;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;

  friend bool operator==(const TranscriptSegment&, const TranscriptSegment&) = default;
};

struct EnrichedTranscript {
  std::vector<TranscriptSegment> segments;

  bool empty() const noexcept { return segments.empty(); }

  friend bool operator==(const EnrichedTranscript&, const EnrichedTranscript&) = default;
};

inline void validate(const WordTimeline& words) {
  for (std::size_t i = 0; i < words.words.size(); ++i) {
    const auto& w = words.words[i];
    if (!(w.start_s <= w.end_s)) throw ValidationError("word " + std::to_string(i) + " ends before it starts");
    if (i && w.start_s < words.words[i - 1].start_s) {
      throw ValidationError("word timeline not sorted at word " + std::to_string(i));
    }
  }
}

inline void validate(const std::vector<SpeakerSegment>& diarization) {
  for (std::size_t i = 0; i < diarization.size(); ++i) {
    const auto& s = diarization[i];
    if (!(s.start_s < s.end_s)) throw ValidationError("speaker segment " + std::to_string(i) + " is empty");
    if (i && s.start_s < diarization[i - 1].start_s) {
      throw ValidationError("diarization not sorted at segment " + std::to_string(i));
    }
  }
}

// Index of the speaker segment a word belongs to: the first segment whose closed
// interval contains the word midpoint (so a midpoint on a shared boundary goes
// to the earlier segment), otherwise the segment at the smallest distance from
// the midpoint, earlier segment on ties.
inline std::size_t assign_speaker(const TimedWord& word, const std::vector<SpeakerSegment>& diarization) {
  const double m = word.midpoint();
  // First segment that could contain m; segments are sorted by start.
  const auto first_after = std::upper_bound(diarization.begin(), diarization.end(), m,
                                            [](double t, const SpeakerSegment& s) { return t < s.start_s; });
  std::size_t best = diarization.size();
  double best_distance = std::numeric_limits<double>::infinity();
  for (auto it = diarization.begin(); it != first_after; ++it) {
    if (m <= it->end_s) return static_cast<std::size_t>(it - diarization.begin());
    const double d = m - it->end_s;
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<std::size_t>(it - diarization.begin());
    }
  }
  if (first_after != diarization.end()) {
    const double d = first_after->start_s - m;
    if (d < best_distance) best = static_cast<std::size_t>(first_after - diarization.begin());
  }
  return best;
}

// Attributes each word to a speaker and merges runs of the same speaker.
// Segment bounds are the first word's start and the last word's end, clipped so
// that consecutive segments never overlap.
inline EnrichedTranscript merge_speaker_transcript(const WordTimeline& words,
                                                   const std::vector<SpeakerSegment>& diarization) {
  validate(words);
  validate(diarization);
  EnrichedTranscript out;
  for (const auto& w : words.words) {
    const std::string label = diarization.empty()
                                  ? std::string(unknown_speaker)
                                  : diarization[assign_speaker(w, diarization)].speaker_label;
    if (!out.segments.empty() && out.segments.back().speaker_label == label) {
      auto& seg = out.segments.back();
      seg.text += ' ';
      seg.text += w.token;
      seg.end_s = std::max(seg.end_s, w.end_s);
    } else {
      out.segments.push_back({label, w.start_s, w.end_s, w.token});
    }
  }
  for (std::size_t i = 0; i + 1 < out.segments.size(); ++i) {
    out.segments[i].end_s = std::min(out.segments[i].end_s, out.segments[i + 1].start_s);
  }
  return out;
}

inline void to_json(nlohmann::json& j, const SpeakerSegment& s) {
  j = {{"speaker", s.speaker_label}, {"start_s", s.start_s}, {"end_s", s.end_s}};
}
inline void from_json(const nlohmann::json& j, SpeakerSegment& s) {
  s.speaker_label = j.at("speaker").get<std::string>();
  s.start_s = j.at("start_s").get<double>();
  s.end_s = j.at("end_s").get<double>();
}
inline void to_json(nlohmann::json& j, const TimedWord& w) {
  j = {{"token", w.token}, {"start_s", w.start_s}, {"end_s", w.end_s}};
}
inline void from_json(const nlohmann::json& j, TimedWord& w) {
  w.token = j.at("token").get<std::string>();
  w.start_s = j.at("start_s").get<double>();
  w.end_s = j.at("end_s").get<double>();
}
inline void to_json(nlohmann::json& j, const WordTimeline& t) { j = {{"words", t.words}}; }
inline void from_json(const nlohmann::json& j, WordTimeline& t) {
  t.words = j.at("words").get<std::vector<TimedWord>>();
}
inline void to_json(nlohmann::json& j, const TranscriptSegment& s) {
  j = {{"speaker", s.speaker_label}, {"start_s", s.start_s}, {"end_s", s.end_s}, {"text", s.text}};
}
inline void from_json(const nlohmann::json& j, TranscriptSegment& s) {
  s.speaker_label = j.at("speaker").get<std::string>();
  s.start_s = j.at("start_s").get<double>();
  s.end_s = j.at("end_s").get<double>();
  s.text = j.at("text").get<std::string>();
}
// The transcript artifact is a bare list of {speaker, start_s, end_s, text}.
inline void to_json(nlohmann::json& j, const EnrichedTranscript& t) { j = t.segments; }
inline void from_json(const nlohmann::json& j, EnrichedTranscript& t) {
  t.segments = j.get<std::vector<TranscriptSegment>>();
}

}  // namespace vidsum::bos
