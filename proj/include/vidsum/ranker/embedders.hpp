#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vidsum/bos/backends.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/external.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/image.hpp"
#include "vidsum/core/rng.hpp"
#include "vidsum/core/text.hpp"
#include "vidsum/ranker/model.hpp"

namespace vidsum::ranker {

inline constexpr int image_embedding_dim = 2048;
inline constexpr int text_embedding_dim = 768;

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual int dim() const = 0;
  virtual Vec embed(const Image& frame) const = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dim() const = 0;
  virtual Vec embed(std::string_view text) const = 0;
};

// Seeded random projection of a coarse colour grid (8 x 6 cells, mean RGB).
class MockImageEmbedder final : public ImageEmbedder {
 public:
  static constexpr int grid_w = 8;
  static constexpr int grid_h = 6;
  static constexpr int features = grid_w * grid_h * 3;

  explicit MockImageEmbedder(std::uint64_t seed = 0, int dim = image_embedding_dim) : projection_(dim, features) {
    require(dim > 0, "embedding dimension must be positive");
    Rng rng(derive_seed(seed, "image-embedder"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(features));
    for (Eigen::Index c = 0; c < projection_.cols(); ++c)
      for (Eigen::Index r = 0; r < projection_.rows(); ++r) projection_(r, c) = rng.normal() * scale;
  }

  int dim() const override { return static_cast<int>(projection_.rows()); }

  Vec embed(const Image& frame) const override {
    require(!frame.empty(), "cannot embed an empty image");
    Vec f = Vec::Zero(features);
    std::vector<int> counts(grid_w * grid_h, 0);
    for (int y = 0; y < frame.height(); ++y) {
      const int gy = y * grid_h / frame.height();
      for (int x = 0; x < frame.width(); ++x) {
        const int cell = gy * grid_w + x * grid_w / frame.width();
        ++counts[static_cast<std::size_t>(cell)];
        for (int c = 0; c < 3; ++c) f(cell * 3 + c) += frame.at(x, y, c) / 255.0;
      }
    }
    for (int cell = 0; cell < grid_w * grid_h; ++cell) {
      const int n = counts[static_cast<std::size_t>(cell)];
      for (int c = 0; c < 3; ++c) f(cell * 3 + c) = n ? f(cell * 3 + c) / n - 0.5 : 0.0;
    }
    return projection_ * f;
  }

 private:
  Mat projection_;
};

// Hashed bag of words: each token maps to a fixed seeded Gaussian vector; the
// text vector is their sum over sqrt(count).
class MockTextEmbedder final : public TextEmbedder {
 public:
  explicit MockTextEmbedder(std::uint64_t seed = 0, int dim = text_embedding_dim) : seed_(seed), dim_(dim) {
    require(dim > 0, "embedding dimension must be positive");
  }

  int dim() const override { return dim_; }

  Vec token_vector(std::string_view token) const {
    Rng rng(derive_seed(seed_, token));
    Vec v(dim_);
    for (auto& x : v) x = rng.normal();
    return v;
  }

  Vec embed(std::string_view text) const override {
    Vec out = Vec::Zero(dim_);
    const auto tokens = text::tokenize(text);
    for (const auto& t : tokens) out += token_vector(t);
    if (!tokens.empty()) out /= std::sqrt(static_cast<double>(tokens.size()));
    return out;
  }

 private:
  std::uint64_t seed_;
  int dim_;
};

namespace detail {

inline Vec vector_from_response(const nlohmann::json& r, int dim, const char* role) {
  if (!r.contains("embedding") || !r["embedding"].is_array()) {
    throw BackendError(std::string(role) + " response lacks 'embedding'");
  }
  const auto values = r["embedding"].get<std::vector<double>>();
  if (static_cast<int>(values.size()) != dim) {
    throw DimensionError(std::string(role) + " returned " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(dim));
  }
  return Eigen::Map<const Vec>(values.data(), dim);
}

}  // namespace detail

class ExternalImageEmbedder final : public ImageEmbedder {
 public:
  explicit ExternalImageEmbedder(std::string command, int dim = image_embedding_dim)
      : command_(std::move(command)), dim_(dim) {}
  int dim() const override { return dim_; }
  Vec embed(const Image& frame) const override {
    const auto r = command_.call({{"role", "image-embedder"}, {"frame", bos::detail::scratch_image(frame, "embed")}});
    return detail::vector_from_response(r, dim_, "image-embedder");
  }

 private:
  ExternalCommand command_;
  int dim_;
};

class ExternalTextEmbedder final : public TextEmbedder {
 public:
  explicit ExternalTextEmbedder(std::string command, int dim = text_embedding_dim)
      : command_(std::move(command)), dim_(dim) {}
  int dim() const override { return dim_; }
  Vec embed(std::string_view text) const override {
    const auto r = command_.call({{"role", "text-embedder"}, {"text", std::string(text)}});
    return detail::vector_from_response(r, dim_, "text-embedder");
  }

 private:
  ExternalCommand command_;
  int dim_;
};

// Words that never count as shared content between a frame and a summary.
inline const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "about", "after", "all",   "also",  "an",    "and",   "any",   "are",   "as",    "at",
      "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",    "does",  "for",   "from",
      "had",   "has",   "have",  "he",    "her",   "his",   "how",   "i",     "if",    "in",    "into",
      "is",    "it",    "its",   "just",  "more",  "most",  "no",    "not",   "now",   "of",    "on",
      "one",   "or",    "our",   "out",   "over",  "she",   "so",    "some",  "than",  "that",  "the",
      "their", "them",  "then",  "there", "these", "they",  "this",  "those", "to",    "up",    "very",
      "was",   "we",    "were",  "what",  "when",  "where", "which", "while", "who",   "will",  "with",
      "would", "you",   "your",  "text",  "screen", "frame", "scene"};
  return words;
}

inline std::set<std::string> content_words(std::string_view text) {
  std::set<std::string> out;
  for (auto& t : text::tokenize(text)) {
    if (!stopwords().contains(t)) out.insert(std::move(t));
  }
  return out;
}

// 1 for frames whose description shares at least one content word with the
// summary.
inline std::vector<int> weak_labels(const std::vector<std::string>& frame_descriptions, std::string_view summary) {
  const auto words = content_words(summary);
  std::vector<int> labels;
  for (const auto& d : frame_descriptions) {
    int y = 0;
    for (const auto& w : content_words(d)) {
      if (words.contains(w)) {
        y = 1;
        break;
      }
    }
    labels.push_back(y);
  }
  return labels;
}

}  // namespace vidsum::ranker
