#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/hash.hpp"
#include "vidsum/core/rng.hpp"

namespace vidsum::ranker {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

struct RankerConfig {
  int image_dim = 2048;
  int text_dim = 768;
  int width = 512;
  int layers = 2;
  int heads = 4;
  int ffn_width = 2048;
  int max_frames = 256;
  bool positional = true;  // learned positional encodings on/off
  double lambda = 0.1;

  int head_dim() const { return width / heads; }

  void validate() const {
    require(image_dim > 0 && text_dim > 0 && width > 0 && ffn_width > 0, "ranker dimensions must be positive");
    require(layers >= 0, "ranker layer count must be non-negative");
    require(heads > 0 && width % heads == 0, "ranker width must be divisible by the head count");
    require(max_frames > 0, "max_frames must be positive");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be a finite non-negative number");
  }

  friend bool operator==(const RankerConfig&, const RankerConfig&) = default;
};

inline void to_json(nlohmann::json& j, const RankerConfig& c) {
  j = {{"image_dim", c.image_dim}, {"text_dim", c.text_dim},     {"width", c.width},
       {"layers", c.layers},       {"heads", c.heads},           {"ffn_width", c.ffn_width},
       {"max_frames", c.max_frames}, {"positional", c.positional}, {"lambda", c.lambda}};
}

inline void from_json(const nlohmann::json& j, RankerConfig& c) {
  RankerConfig d;
  c.image_dim = j.value("image_dim", d.image_dim);
  c.text_dim = j.value("text_dim", d.text_dim);
  c.width = j.value("width", d.width);
  c.layers = j.value("layers", d.layers);
  c.heads = j.value("heads", d.heads);
  c.ffn_width = j.value("ffn_width", d.ffn_width);
  c.max_frames = j.value("max_frames", d.max_frames);
  c.positional = j.value("positional", d.positional);
  c.lambda = j.value("lambda", d.lambda);
}

// Weights are stored out x in; biases and gains as 1 x n rows.
struct EncoderLayer {
  Mat ln1_gain, ln1_bias;
  Mat wq, bq, wk, bk, wv, bv, wo, bo;
  Mat ln2_gain, ln2_bias;
  Mat w1, b1, w2, b2;
};

struct RankerParams {
  Mat image_w, image_b;
  Mat text_w, text_b;
  Mat positional;  // max_frames x width
  std::vector<EncoderLayer> layers;
  Mat cross_wq, cross_bq, cross_wk, cross_bk, cross_wv, cross_bv;
  Mat score_w, score_b;  // 1 x width, 1 x 1

  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  // Same shapes, all zeros.
  RankerParams zeros_like() const {
    RankerParams out = *this;
    out.visit([](const std::string&, Mat& m) { m.setZero(); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& p, F& f) {
    f(std::string("image_projection.weight"), p.image_w);
    f(std::string("image_projection.bias"), p.image_b);
    f(std::string("text_projection.weight"), p.text_w);
    f(std::string("text_projection.bias"), p.text_b);
    f(std::string("positional"), p.positional);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto& L = p.layers[l];
      const std::string pre = "encoder." + std::to_string(l) + ".";
      f(pre + "ln1.gain", L.ln1_gain);
      f(pre + "ln1.bias", L.ln1_bias);
      f(pre + "attn.wq", L.wq);
      f(pre + "attn.bq", L.bq);
      f(pre + "attn.wk", L.wk);
      f(pre + "attn.bk", L.bk);
      f(pre + "attn.wv", L.wv);
      f(pre + "attn.bv", L.bv);
      f(pre + "attn.wo", L.wo);
      f(pre + "attn.bo", L.bo);
      f(pre + "ln2.gain", L.ln2_gain);
      f(pre + "ln2.bias", L.ln2_bias);
      f(pre + "ffn.w1", L.w1);
      f(pre + "ffn.b1", L.b1);
      f(pre + "ffn.w2", L.w2);
      f(pre + "ffn.b2", L.b2);
    }
    f(std::string("cross.wq"), p.cross_wq);
    f(std::string("cross.bq"), p.cross_bq);
    f(std::string("cross.wk"), p.cross_wk);
    f(std::string("cross.bk"), p.cross_bk);
    f(std::string("cross.wv"), p.cross_wv);
    f(std::string("cross.bv"), p.cross_bv);
    f(std::string("score.weight"), p.score_w);
    f(std::string("score.bias"), p.score_b);
  }
};

struct RankerModel {
  RankerConfig config;
  RankerParams params;

  // Digest over config and every tensor, in visit order.
  std::string param_hash() const {
    Fnv1a h;
    h.update(nlohmann::json(config).dump());
    params.visit([&](const std::string& name, const Mat& m) {
      h.update(name);
      h.update(static_cast<std::uint64_t>(m.rows())).update(static_cast<std::uint64_t>(m.cols()));
      h.update(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
    });
    return h.hex();
  }

  void check_finite() const {
    params.visit([](const std::string& name, const Mat& m) {
      if (!m.allFinite()) throw NumericError("ranker parameter " + name + " is not finite");
    });
  }
};

namespace detail {

inline Mat xavier(Rng& rng, int out, int in) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  Mat m(out, in);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-a, a);
  return m;
}

inline Mat row_zeros(int n) { return Mat::Zero(1, n); }
inline Mat row_ones(int n) { return Mat::Ones(1, n); }

}  // namespace detail

// Xavier-uniform weights, zero biases, unit layer-norm gains, N(0, 0.02)
// positional table.
inline RankerModel init_ranker(const RankerConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int w = config.width;
  RankerModel m{config, {}};
  auto& p = m.params;
  p.image_w = detail::xavier(rng, w, config.image_dim);
  p.image_b = detail::row_zeros(w);
  p.text_w = detail::xavier(rng, w, config.text_dim);
  p.text_b = detail::row_zeros(w);
  p.positional = Mat(config.max_frames, w);
  for (Eigen::Index c = 0; c < p.positional.cols(); ++c)
    for (Eigen::Index r = 0; r < p.positional.rows(); ++r) p.positional(r, c) = rng.normal(0.0, 0.02);
  if (!config.positional) p.positional.setZero();
  for (int l = 0; l < config.layers; ++l) {
    EncoderLayer L;
    L.ln1_gain = detail::row_ones(w);
    L.ln1_bias = detail::row_zeros(w);
    L.wq = detail::xavier(rng, w, w);
    L.bq = detail::row_zeros(w);
    L.wk = detail::xavier(rng, w, w);
    L.bk = detail::row_zeros(w);
    L.wv = detail::xavier(rng, w, w);
    L.bv = detail::row_zeros(w);
    L.wo = detail::xavier(rng, w, w);
    L.bo = detail::row_zeros(w);
    L.ln2_gain = detail::row_ones(w);
    L.ln2_bias = detail::row_zeros(w);
    L.w1 = detail::xavier(rng, config.ffn_width, w);
    L.b1 = detail::row_zeros(config.ffn_width);
    L.w2 = detail::xavier(rng, w, config.ffn_width);
    L.b2 = detail::row_zeros(w);
    p.layers.push_back(std::move(L));
  }
  p.cross_wq = detail::xavier(rng, w, w);
  p.cross_bq = detail::row_zeros(w);
  p.cross_wk = detail::xavier(rng, w, w);
  p.cross_bk = detail::row_zeros(w);
  p.cross_wv = detail::xavier(rng, w, w);
  p.cross_bv = detail::row_zeros(w);
  p.score_w = detail::xavier(rng, 1, w);
  p.score_b = Mat::Zero(1, 1);
  return m;
}

}  // namespace vidsum::ranker
