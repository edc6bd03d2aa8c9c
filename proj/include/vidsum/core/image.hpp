#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"

namespace vidsum {

// Interleaved 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;

  Image(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0})
      : width_(width), height_(height) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill[0];
      pixels_[i + 1] = fill[1];
      pixels_[i + 2] = fill[2];
    }
  }

  Image(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
      throw DimensionError("pixel buffer does not match " + std::to_string(width) + "x" +
                           std::to_string(height) + "x3");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  void set_rgb(int x, int y, std::array<std::uint8_t, 3> rgb) {
    for (int c = 0; c < 3; ++c) at(x, y, c) = rgb[static_cast<std::size_t>(c)];
  }

  // ITU-R BT.601 luma on the [0, 255] scale.
  double luma(int x, int y) const {
    return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
  }

  std::vector<double> luma_plane() const {
    std::vector<double> out(static_cast<std::size_t>(width_) * height_);
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) out[static_cast<std::size_t>(y) * width_ + x] = luma(x, y);
    return out;
  }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::uint64_t content_hash() const {
    Fnv1a h;
    h.update(static_cast<std::uint64_t>(width_)).update(static_cast<std::uint64_t>(height_));
    h.update(pixels_.data(), pixels_.size());
    return h.digest();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

inline void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("image shapes differ: " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

// Binary PPM (P6, maxval 255).
inline std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels().data()), image.pixels().size());
  return out;
}

inline Image decode_ppm(const std::string& bytes, const std::string& origin = "<memory>") {
  std::istringstream in(bytes);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  auto skip_comments = [&in] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  in >> magic;
  if (magic != "P6") throw DecodeError("not a binary PPM: " + origin);
  skip_comments();
  in >> width;
  skip_comments();
  in >> height;
  skip_comments();
  in >> maxval;
  if (!in || width <= 0 || height <= 0 || maxval != 255) {
    throw DecodeError("bad PPM header: " + origin);
  }
  in.get();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw DecodeError("truncated PPM: " + origin);
  }
  return Image(width, height, std::move(pixels));
}

inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open image " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_ppm(buf.str(), path.string());
}

}  // namespace vidsum
