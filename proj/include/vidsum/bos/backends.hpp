#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vidsum/assets/types.hpp"
#include "vidsum/bos/transcript.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/external.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/image.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/core/text.hpp"
#include "vidsum/core/wav.hpp"

namespace vidsum::bos {

inline constexpr std::string_view caption_placeholder = "[no caption]";

class OcrBackend {
 public:
  virtual ~OcrBackend() = default;
  virtual std::string extract(const Image& frame, std::size_t frame_index) const = 0;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  virtual std::string caption(const Image& frame, std::size_t frame_index) const = 0;
};

class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  virtual WordTimeline transcribe(const AudioTrack& audio) const = 0;
};

class DiarizationBackend {
 public:
  virtual ~DiarizationBackend() = default;
  virtual std::vector<SpeakerSegment> diarize(const AudioTrack& audio) const = 0;
};

// ---------------------------------------------------------------------------
// Mocks

namespace detail {

inline bool is_uniform(const Image& frame) {
  const auto& p = frame.pixels();
  for (std::size_t i = 3; i < p.size(); ++i)
    if (p[i] != p[i % 3]) return false;
  return true;
}

}  // namespace detail

// Blank frames read as empty. Other frames are keyed by content hash: about
// half carry one ticker-style string from a fixed bank.
class MockOcr final : public OcrBackend {
 public:
  MockOcr() = default;
  explicit MockOcr(std::string fixed) : fixed_(std::move(fixed)), has_fixed_(true) {}

  std::string extract(const Image& frame, std::size_t) const override {
    if (has_fixed_) return fixed_;
    if (detail::is_uniform(frame)) return "";
    static constexpr std::string_view bank[] = {
        "NIFTY 50 +1.2%",         "SENSEX 72,400",     "Inflation 5.4%",       "SIP returns 10-12%",
        "Gold +0.8%",             "Repo rate 6.5%",    "S&P 500 -0.3%",        "Emergency fund: 6 months",
    };
    const auto h = frame.content_hash();
    if ((h >> 7) % 2 == 0) return "";
    return std::string(bank[h % std::size(bank)]);
  }

 private:
  std::string fixed_;
  bool has_fixed_ = false;
};

class FailingOcr final : public OcrBackend {
 public:
  std::string extract(const Image&, std::size_t frame_index) const override {
    throw BackendError("ocr backend failed on frame " + std::to_string(frame_index));
  }
};

// Captions are a function of the frame hash, so they are stable across runs and
// differ between frames.
class MockCaption final : public CaptionBackend {
 public:
  enum class Mode { normal, empty, timeout };

  explicit MockCaption(Mode mode = Mode::normal) : mode_(mode) {}

  std::string caption(const Image& frame, std::size_t frame_index) const override {
    if (mode_ == Mode::timeout) {
      throw BackendError("caption backend timed out on frame " + std::to_string(frame_index));
    }
    if (mode_ == Mode::empty) return "";
    static constexpr std::string_view shots[] = {"a close-up of", "a wide shot of", "a frame showing"};
    static constexpr std::string_view subjects[] = {"a presenter",    "two speakers", "a bar chart",
                                                    "a stock ticker", "a studio desk", "a slide"};
    static constexpr std::string_view settings[] = {"in a studio", "beside a rising chart",
                                                    "against a dark background", "with bright accent colors",
                                                    "next to a price table"};
    const auto h = frame.content_hash();
    return std::string(shots[h % 3]) + " " + std::string(subjects[(h >> 8) % 6]) + " " +
           std::string(settings[(h >> 16) % 5]) + ", scene " + Fnv1a::to_hex(h).substr(0, 6);
  }

 private:
  Mode mode_;
};

// Places words from a fixed sentence bank over the voiced stretches of the
// track (RMS over 0.1 s windows). The sentence order is seeded by the audio hash.
class MockAsr final : public AsrBackend {
 public:
  WordTimeline transcribe(const AudioTrack& audio) const override {
    static constexpr std::string_view sentences[] = {
        "Welcome back to the show, today we talk about building wealth.",
        "Jared Dillian says the Nifty 50 could deliver 10-12% returns over the next decade.",
        "Keep an emergency fund that covers 6 months of expenses.",
        "Inflation is running near 5.4% so idle cash loses value.",
        "A monthly SIP of 5000 rupees compounds over the years.",
        "Gold gained 0.8% this week while the Sensex closed near 72,400.",
        "Do not chase momentum stocks without a clear exit plan.",
        "Diversify across equity, debt and gold to manage risk.",
        "The Reserve Bank kept the repo rate at 6.5% this quarter.",
        "Start early, stay invested, and review your portfolio every year.",
    };
    Fnv1a h;
    h.update(audio.samples().data(), audio.samples().size() * sizeof(std::int16_t));
    Rng rng(h.digest());

    std::vector<std::string> words;
    auto refill = [&] {
      const auto s = sentences[rng.below(std::size(sentences))];
      for (auto& w : text::split_words(s)) words.push_back(std::move(w));
    };

    WordTimeline out;
    const int rate = audio.sample_rate_hz();
    const auto window = static_cast<std::size_t>(rate / 10);
    const auto& samples = audio.samples();
    std::size_t next_word = 0;
    double cursor = 0.0;
    for (std::size_t w0 = 0; w0 + window <= samples.size(); w0 += window) {
      double energy = 0.0;
      for (std::size_t i = w0; i < w0 + window; ++i) energy += static_cast<double>(samples[i]) * samples[i];
      if (std::sqrt(energy / static_cast<double>(window)) < 500.0) continue;
      const double win_start = static_cast<double>(w0) / rate;
      const double win_end = static_cast<double>(w0 + window) / rate;
      cursor = std::max(cursor, win_start);
      while (cursor < win_end) {
        if (next_word >= words.size()) refill();
        const auto& token = words[next_word++];
        const double length = std::min(0.7, 0.2 + 0.04 * static_cast<double>(token.size()));
        out.words.push_back({token, cursor, cursor + length});
        cursor += length + 0.05;
      }
    }
    return out;
  }
};

// Labels voiced 0.1 s windows by their zero-crossing pitch estimate. Pitches
// within 40 Hz of a known speaker reuse that label (SPEAKER_00, SPEAKER_01, ...).
class MockDiarization final : public DiarizationBackend {
 public:
  std::vector<SpeakerSegment> diarize(const AudioTrack& audio) const override {
    const int rate = audio.sample_rate_hz();
    const auto window = static_cast<std::size_t>(rate / 10);
    const auto& s = audio.samples();
    std::vector<double> pitches;
    std::vector<SpeakerSegment> out;
    bool open = false;
    for (std::size_t w0 = 0; w0 + window <= s.size(); w0 += window) {
      double energy = 0.0;
      std::size_t crossings = 0;
      for (std::size_t i = w0; i < w0 + window; ++i) {
        energy += static_cast<double>(s[i]) * s[i];
        if (i > w0 && ((s[i - 1] < 0) != (s[i] < 0))) ++crossings;
      }
      const double start = static_cast<double>(w0) / rate;
      const double end = static_cast<double>(w0 + window) / rate;
      if (std::sqrt(energy / static_cast<double>(window)) < 500.0) {
        open = false;
        continue;
      }
      const double pitch = static_cast<double>(crossings) / (2.0 * 0.1);
      std::size_t label = pitches.size();
      for (std::size_t k = 0; k < pitches.size(); ++k)
        if (std::abs(pitches[k] - pitch) <= 40.0) {
          label = k;
          break;
        }
      if (label == pitches.size()) pitches.push_back(pitch);
      char name[32];
      std::snprintf(name, sizeof name, "SPEAKER_%02zu", label);
      if (open && out.back().speaker_label == name) {
        out.back().end_s = end;
      } else {
        out.push_back({name, start, end});
        open = true;
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Out-of-process adapters (see ExternalCommand for the transport).

namespace detail {

inline std::string scratch_image(const Image& frame, std::string_view tag) {
  const auto path = ExternalCommand::scratch_dir() /
                    (std::string(tag) + "-" + Fnv1a::to_hex(frame.content_hash()) + ".ppm");
  write_file(path, encode_ppm(frame));
  return path.string();
}

inline std::string scratch_audio(const AudioTrack& audio) {
  Fnv1a h;
  h.update(audio.samples().data(), audio.samples().size() * sizeof(std::int16_t));
  const auto path = ExternalCommand::scratch_dir() / ("audio-" + h.hex() + ".wav");
  write_file(path, encode_wav(PcmAudio{audio.samples(), 1, audio.sample_rate_hz()}));
  return path.string();
}

}  // namespace detail

class ExternalOcr final : public OcrBackend {
 public:
  explicit ExternalOcr(std::string command) : command_(std::move(command)) {}
  std::string extract(const Image& frame, std::size_t frame_index) const override {
    const auto r = command_.call(
        {{"role", "ocr"}, {"frame", detail::scratch_image(frame, "ocr")}, {"frame_index", frame_index}});
    if (!r.contains("text") || !r["text"].is_string()) throw BackendError("ocr response lacks 'text'");
    return r["text"].get<std::string>();
  }

 private:
  ExternalCommand command_;
};

class ExternalCaption final : public CaptionBackend {
 public:
  explicit ExternalCaption(std::string command) : command_(std::move(command)) {}
  std::string caption(const Image& frame, std::size_t frame_index) const override {
    const auto r = command_.call(
        {{"role", "caption"}, {"frame", detail::scratch_image(frame, "caption")}, {"frame_index", frame_index}});
    if (!r.contains("caption") || !r["caption"].is_string()) throw BackendError("caption response lacks 'caption'");
    return r["caption"].get<std::string>();
  }

 private:
  ExternalCommand command_;
};

class ExternalAsr final : public AsrBackend {
 public:
  explicit ExternalAsr(std::string command) : command_(std::move(command)) {}
  WordTimeline transcribe(const AudioTrack& audio) const override {
    const auto r = command_.call({{"role", "asr"}, {"audio", detail::scratch_audio(audio)}});
    try {
      return r.get<WordTimeline>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("asr response malformed: ") + e.what());
    }
  }

 private:
  ExternalCommand command_;
};

class ExternalDiarization final : public DiarizationBackend {
 public:
  explicit ExternalDiarization(std::string command) : command_(std::move(command)) {}
  std::vector<SpeakerSegment> diarize(const AudioTrack& audio) const override {
    const auto r = command_.call({{"role", "diarization"}, {"audio", detail::scratch_audio(audio)}});
    try {
      return r.at("segments").get<std::vector<SpeakerSegment>>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("diarization response malformed: ") + e.what());
    }
  }

 private:
  ExternalCommand command_;
};

// ---------------------------------------------------------------------------
// Operations

inline std::string ocr_frame(const Image& frame, const OcrBackend& backend, std::size_t frame_index = 0) {
  try {
    return text::normalize_whitespace(backend.extract(frame, frame_index));
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("ocr failed on frame " + std::to_string(frame_index) + ": " + e.what());
  }
}

// Backend errors name the frame. An empty caption degrades to the placeholder.
inline std::string caption_frame(const Image& frame, const CaptionBackend& backend, std::size_t frame_index = 0) {
  std::string caption;
  try {
    caption = backend.caption(frame, frame_index);
  } catch (const BackendError& e) {
    if (std::string_view(e.what()).find("frame " + std::to_string(frame_index)) != std::string_view::npos) throw;
    throw BackendError("caption failed on frame " + std::to_string(frame_index) + ": " + e.what());
  } catch (const std::exception& e) {
    throw BackendError("caption failed on frame " + std::to_string(frame_index) + ": " + e.what());
  }
  caption = text::normalize_whitespace(caption);
  if (caption.empty()) return std::string(caption_placeholder);
  return caption;
}

}  // namespace vidsum::bos
