#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"

namespace vidsum {

struct PcmAudio {
  std::vector<std::int16_t> samples;  // interleaved when channels > 1
  int channels = 1;
  int sample_rate_hz = 0;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)]);
  return v;
}
inline std::uint16_t get_u16(const std::string& in, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(in[at]) |
                                    (static_cast<unsigned char>(in[at + 1]) << 8));
}

}  // namespace detail

// 16-bit PCM RIFF/WAVE.
inline std::string encode_wav(const PcmAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out = "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, static_cast<std::uint16_t>(audio.channels));
  detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz * audio.channels * 2));
  detail::put_u16(out, static_cast<std::uint16_t>(audio.channels * 2));
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (auto s : audio.samples) detail::put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

inline PcmAudio decode_wav(const std::string& bytes, const std::string& origin = "<memory>") {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw DecodeError("not a RIFF/WAVE file: " + origin);
  }
  PcmAudio audio;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::string id = bytes.substr(at, 4);
    const std::uint32_t size = detail::get_u32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (body + size > bytes.size()) throw DecodeError("truncated WAV chunk '" + id + "': " + origin);
    if (id == "fmt ") {
      if (size < 16) throw DecodeError("short fmt chunk: " + origin);
      const auto format = detail::get_u16(bytes, body);
      audio.channels = detail::get_u16(bytes, body + 2);
      audio.sample_rate_hz = static_cast<int>(detail::get_u32(bytes, body + 4));
      const auto bits = detail::get_u16(bytes, body + 14);
      if (format != 1 || bits != 16) throw DecodeError("only 16-bit PCM WAV is supported: " + origin);
      if (audio.channels < 1 || audio.sample_rate_hz <= 0) throw DecodeError("bad WAV format: " + origin);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DecodeError("WAV data before fmt: " + origin);
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<std::int16_t>(detail::get_u16(bytes, body + 2 * i));
      }
      return audio;
    }
    at = body + size + (size & 1);
  }
  throw DecodeError("WAV has no data chunk: " + origin);
}

inline PcmAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open audio " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_wav(buf.str(), path.string());
}

// Downmixes to mono and linearly resamples to `target_hz`.
inline std::vector<std::int16_t> to_mono(const PcmAudio& audio, int target_hz) {
  const std::size_t frames = audio.samples.size() / static_cast<std::size_t>(audio.channels);
  std::vector<double> mono(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < audio.channels; ++c) acc += audio.samples[f * audio.channels + c];
    mono[f] = acc / audio.channels;
  }
  if (audio.sample_rate_hz == target_hz || frames == 0) {
    std::vector<std::int16_t> out(frames);
    for (std::size_t i = 0; i < frames; ++i) out[i] = static_cast<std::int16_t>(mono[i]);
    return out;
  }
  const double ratio = static_cast<double>(audio.sample_rate_hz) / target_hz;
  const auto out_frames = static_cast<std::size_t>(static_cast<double>(frames) / ratio);
  std::vector<std::int16_t> out(out_frames);
  for (std::size_t i = 0; i < out_frames; ++i) {
    const double src = static_cast<double>(i) * ratio;
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, frames - 1);
    const double t = src - static_cast<double>(i0);
    out[i] = static_cast<std::int16_t>(mono[i0] * (1.0 - t) + mono[i1] * t);
  }
  return out;
}

}  // namespace vidsum
