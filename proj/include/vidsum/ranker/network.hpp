#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"
#include "vidsum/ranker/model.hpp"

namespace vidsum::ranker {

inline constexpr double layer_norm_eps = 1e-5;
inline constexpr double bce_clamp = 1e-7;

namespace detail {

// y = x W^T + b, rows are samples.
inline Mat affine(const Mat& x, const Mat& w, const Mat& b) {
  Mat y = x * w.transpose();
  y.rowwise() += b.row(0);
  return y;
}

inline void softmax_rows_inplace(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp().matrix();
    s.row(r) /= s.row(r).sum();
  }
}

// Gradient of a row-softmax: given p and dL/dp, returns dL/dlogits.
inline Mat softmax_rows_backward(const Mat& p, const Mat& dp) {
  Mat out(p.rows(), p.cols());
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double dot = p.row(r).dot(dp.row(r));
    out.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
  }
  return out;
}

struct LayerNormCache {
  Mat xhat;
  Vec rstd;
};

inline Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, LayerNormCache& cache) {
  const auto n = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).sum() / n;
    const RowVec centered = x.row(r).array() - mu;
    const double var = centered.squaredNorm() / n;
    cache.rstd(r) = 1.0 / std::sqrt(var + layer_norm_eps);
    cache.xhat.row(r) = centered * cache.rstd(r);
  }
  Mat y = cache.xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

inline Mat layer_norm_backward(const Mat& dy, const Mat& gain, const LayerNormCache& cache, Mat& dgain, Mat& dbias) {
  const auto n = static_cast<double>(dy.cols());
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / n;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / n;
    dx.row(r) = cache.rstd(r) * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

inline constexpr double gelu_c = 0.7978845608028654;  // sqrt(2/pi)

inline double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(gelu_c * (x + 0.044715 * x * x * x))); }

inline double gelu_grad(double x) {
  const double t = std::tanh(gelu_c * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * gelu_c * (1.0 + 3.0 * 0.044715 * x * x);
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void check_rows(const Mat& x, int cols, const char* what) {
  if (x.cols() != cols) {
    throw DimensionError(std::string(what) + " expects width " + std::to_string(cols) + ", got " +
                         std::to_string(x.cols()));
  }
}

}  // namespace detail

inline Vec project_image(std::span<const double> raw, const RankerModel& model) {
  if (static_cast<int>(raw.size()) != model.config.image_dim) {
    throw DimensionError("image embedding must have length " + std::to_string(model.config.image_dim) + ", got " +
                         std::to_string(raw.size()));
  }
  const Eigen::Map<const Vec> x(raw.data(), static_cast<Eigen::Index>(raw.size()));
  if (!x.allFinite()) throw NumericError("image embedding contains non-finite values");
  return model.params.image_w * x + model.params.image_b.row(0).transpose();
}

inline Vec project_text(std::span<const double> raw, const RankerModel& model) {
  if (static_cast<int>(raw.size()) != model.config.text_dim) {
    throw DimensionError("text embedding must have length " + std::to_string(model.config.text_dim) + ", got " +
                         std::to_string(raw.size()));
  }
  const Eigen::Map<const Vec> x(raw.data(), static_cast<Eigen::Index>(raw.size()));
  if (!x.allFinite()) throw NumericError("text embedding contains non-finite values");
  return model.params.text_w * x + model.params.text_b.row(0).transpose();
}

struct LayerCache {
  Mat x_in;
  detail::LayerNormCache ln1;
  Mat u, q, k, v;
  std::vector<Mat> attn;  // per head, N x N
  Mat o;
  Mat x_mid;
  detail::LayerNormCache ln2;
  Mat u2, pre_act, act;
};

struct ForwardCache {
  Mat raw_frames;  // N x image_dim
  Vec raw_text;
  Mat x0;          // projected frames plus positions
  std::vector<LayerCache> layers;
  Mat h;           // encoder output, N x width
  RowVec text;     // projected text
  RowVec qc;
  Mat kc, vc;
  Mat attention;   // heads x N
  Mat context;     // heads x head_dim, attended values
  Vec logits, scores;
};

namespace detail {

inline Mat encode_cached(const Mat& projected, const RankerModel& model, std::vector<LayerCache>* caches) {
  const auto& cfg = model.config;
  const auto n = projected.rows();
  if (n == 0) throw ContractError("encode_frames needs at least one frame");
  if (n > cfg.max_frames) {
    throw ContractError("encode_frames got " + std::to_string(n) + " frames, limit is " +
                        std::to_string(cfg.max_frames));
  }
  check_rows(projected, cfg.width, "encode_frames");
  Mat x = projected;
  if (cfg.positional) x += model.params.positional.topRows(n);
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto& L : model.params.layers) {
    LayerCache c;
    c.x_in = x;
    c.u = layer_norm(x, L.ln1_gain, L.ln1_bias, c.ln1);
    c.q = affine(c.u, L.wq, L.bq);
    c.k = affine(c.u, L.wk, L.bk);
    c.v = affine(c.u, L.wv, L.bv);
    c.o.resize(n, cfg.width);
    for (int h = 0; h < cfg.heads; ++h) {
      Mat s = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows_inplace(s);
      c.o.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
      c.attn.push_back(std::move(s));
    }
    c.x_mid = x + affine(c.o, L.wo, L.bo);
    c.u2 = layer_norm(c.x_mid, L.ln2_gain, L.ln2_bias, c.ln2);
    c.pre_act = affine(c.u2, L.w1, L.b1);
    c.act = c.pre_act.unaryExpr([](double v) { return gelu(v); });
    x = c.x_mid + affine(c.act, L.w2, L.b2);
    if (caches) caches->push_back(std::move(c));
  }
  return x;
}

struct AlignParts {
  RowVec qc;
  Mat kc, vc, attention, context;
};

inline AlignParts align(const RowVec& text, const Mat& h_frame, const RankerModel& model) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  if (h_frame.rows() == 0) throw ContractError("attention_align needs at least one frame");
  check_rows(h_frame, cfg.width, "attention_align");
  if (text.size() != cfg.width) throw DimensionError("projected text must have length " + std::to_string(cfg.width));
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  AlignParts a;
  a.qc = text * p.cross_wq.transpose() + p.cross_bq.row(0);
  a.kc = affine(h_frame, p.cross_wk, p.cross_bk);
  a.vc = affine(h_frame, p.cross_wv, p.cross_bv);
  a.attention.resize(cfg.heads, h_frame.rows());
  a.context.resize(cfg.heads, dh);
  for (int h = 0; h < cfg.heads; ++h) {
    a.attention.row(h) = a.qc.segment(h * dh, dh) * a.kc.middleCols(h * dh, dh).transpose() * scale;
  }
  if (!a.attention.allFinite()) throw NumericError("attention logits are not finite");
  softmax_rows_inplace(a.attention);
  for (int h = 0; h < cfg.heads; ++h) a.context.row(h) = a.attention.row(h) * a.vc.middleCols(h * dh, dh);
  return a;
}

inline Mat to_matrix(const std::vector<Vec>& rows, int width, const char* what) {
  Mat m(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw DimensionError(std::string(what) + " row " + std::to_string(i) + " must have length " +
                           std::to_string(width));
    }
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

}  // namespace detail

// Transformer encoder over the projected frames (one row per frame).
inline Mat encode_frames(const Mat& projected, const RankerModel& model) {
  return detail::encode_cached(projected, model, nullptr);
}

inline std::vector<Vec> encode_frames(const std::vector<Vec>& projected, const RankerModel& model) {
  const Mat h = encode_frames(detail::to_matrix(projected, model.config.width, "encode_frames"), model);
  std::vector<Vec> out;
  for (Eigen::Index r = 0; r < h.rows(); ++r) out.emplace_back(h.row(r).transpose());
  return out;
}

// heads x N; row h is softmax(Q_h K_h^T / sqrt(d_head)).
inline Mat attention_align(const Vec& text_proj, const Mat& h_frame, const RankerModel& model) {
  return detail::align(text_proj.transpose(), h_frame, model).attention;
}

inline Mat attention_align(const Vec& text_proj, const std::vector<Vec>& h_frame, const RankerModel& model) {
  return attention_align(text_proj, detail::to_matrix(h_frame, model.config.width, "attention_align"), model);
}

inline std::vector<double> score_frames(const Mat& h_frame, const RankerModel& model) {
  if (h_frame.rows() == 0) throw ContractError("score_frames needs at least one frame");
  detail::check_rows(h_frame, model.config.width, "score_frames");
  const Vec z = h_frame * model.params.score_w.row(0).transpose();
  std::vector<double> s(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z(i) + model.params.score_b(0, 0);
    if (!std::isfinite(zi)) throw NumericError("frame score logit " + std::to_string(i) + " is not finite");
    s[static_cast<std::size_t>(i)] = detail::logistic(zi);
  }
  return s;
}

inline std::vector<double> score_frames(const std::vector<Vec>& h_frame, const RankerModel& model) {
  return score_frames(detail::to_matrix(h_frame, model.config.width, "score_frames"), model);
}

struct LossResult {
  double loss = 0.0;
  double bce = 0.0;
  double diversity = 0.0;
  std::vector<double> d_scores;  // dL/ds_i, zero where the clamp is active
  std::vector<double> d_logits;  // (s_i - y_i) / N, the unclamped BCE gradient at the logit
  Mat d_attention;               // dL/dA
};

// L = BCE(s, y) + lambda * ||A A^T - I||_F^2, with gradients to s and A.
inline LossResult ranker_loss(std::span<const double> scores, std::span<const int> labels, const Mat& attention,
                              double lambda) {
  if (scores.size() != labels.size()) {
    throw ContractError("ranker_loss got " + std::to_string(scores.size()) + " scores but " +
                        std::to_string(labels.size()) + " labels");
  }
  require(!scores.empty(), "ranker_loss needs at least one frame");
  require(lambda >= 0.0, "lambda must be non-negative");
  LossResult r;
  const double n = static_cast<double>(scores.size());
  r.d_scores.resize(scores.size());
  r.d_logits.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    const double raw = scores[i];
    const double s = std::clamp(raw, bce_clamp, 1.0 - bce_clamp);
    const double y = labels[i];
    r.bce -= (y * std::log(s) + (1.0 - y) * std::log(1.0 - s)) / n;
    // Zero gradient where the clamp is active.
    const bool clamped = raw < bce_clamp || raw > 1.0 - bce_clamp;
    r.d_scores[i] = clamped ? 0.0 : (-(y / s) + (1.0 - y) / (1.0 - s)) / n;
    r.d_logits[i] = (raw - y) / n;
  }
  const Mat gram_minus_i = attention * attention.transpose() - Mat::Identity(attention.rows(), attention.rows());
  r.diversity = gram_minus_i.squaredNorm();
  r.d_attention = (lambda * 4.0) * gram_minus_i * attention;
  r.loss = r.bce + lambda * r.diversity;
  return r;
}

// One training example: raw frame features (N x image_dim), raw text feature,
// and a 0/1 relevance label per frame.
struct RankerItem {
  Mat frames;
  Vec text;
  std::vector<int> labels;
};

inline ForwardCache forward(const RankerModel& model, const Mat& raw_frames, const Vec& raw_text) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  detail::check_rows(raw_frames, cfg.image_dim, "frame embeddings");
  if (raw_text.size() != cfg.text_dim) throw DimensionError("text embedding must have length " + std::to_string(cfg.text_dim));
  if (!raw_frames.allFinite() || !raw_text.allFinite()) throw NumericError("ranker input contains non-finite values");
  ForwardCache c;
  c.raw_frames = raw_frames;
  c.raw_text = raw_text;
  c.x0 = detail::affine(raw_frames, p.image_w, p.image_b);
  c.h = detail::encode_cached(c.x0, model, &c.layers);
  if (cfg.positional) c.x0 += p.positional.topRows(raw_frames.rows());
  c.text = raw_text.transpose() * p.text_w.transpose() + p.text_b.row(0);
  auto parts = detail::align(c.text, c.h, model);
  c.qc = std::move(parts.qc);
  c.kc = std::move(parts.kc);
  c.vc = std::move(parts.vc);
  c.attention = std::move(parts.attention);
  c.context = std::move(parts.context);
  c.logits = c.h * p.score_w.row(0).transpose();
  c.logits.array() += p.score_b(0, 0);
  c.scores = c.logits.unaryExpr([](double z) { return detail::logistic(z); });
  return c;
}

struct GradientResult {
  LossResult loss;
  RankerParams grad;
};

// Loss for one item and its gradient with respect to every parameter. The
// attended values (cross V map) do not enter the loss, so their gradient is 0.
inline GradientResult loss_and_gradient(const RankerModel& model, const RankerItem& item) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const ForwardCache c = forward(model, item.frames, item.text);
  const std::vector<double> scores(c.scores.data(), c.scores.data() + c.scores.size());
  GradientResult out{ranker_loss(scores, item.labels, c.attention, cfg.lambda), p.zeros_like()};
  auto& g = out.grad;
  const auto n = c.h.rows();
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Scoring head. Backprop goes through the logit form of BCE so a saturated
  // frame still gets a gradient; off the clamp this equals dL/ds * s(1-s).
  Vec dz(n);
  for (Eigen::Index i = 0; i < n; ++i) dz(i) = out.loss.d_logits[static_cast<std::size_t>(i)];
  g.score_w.row(0) = dz.transpose() * c.h;
  g.score_b(0, 0) = dz.sum();
  Mat dh_frame = dz * p.score_w;

  // Cross attention.
  RowVec dqc = RowVec::Zero(cfg.width);
  Mat dkc = Mat::Zero(n, cfg.width);
  const Mat dlogits = detail::softmax_rows_backward(c.attention, out.loss.d_attention);
  for (int h = 0; h < cfg.heads; ++h) {
    dqc.segment(h * dh, dh) = dlogits.row(h) * c.kc.middleCols(h * dh, dh) * scale;
    dkc.middleCols(h * dh, dh) = dlogits.row(h).transpose() * c.qc.segment(h * dh, dh) * scale;
  }
  g.cross_wq = dqc.transpose() * c.text;
  g.cross_bq.row(0) = dqc;
  const RowVec dtext = dqc * p.cross_wq;
  g.cross_wk = dkc.transpose() * c.h;
  g.cross_bk.row(0) = dkc.colwise().sum();
  dh_frame += dkc * p.cross_wk;
  g.text_w = dtext.transpose() * c.raw_text.transpose();
  g.text_b.row(0) = dtext;

  // Encoder, last layer first.
  Mat dx = dh_frame;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& L = p.layers[li];
    const auto& lc = c.layers[li];
    auto& G = g.layers[li];
    // x_out = x_mid + FFN(LN2(x_mid))
    G.w2 = dx.transpose() * lc.act;
    G.b2.row(0) = dx.colwise().sum();
    const Mat dact = dx * L.w2;
    const Mat dpre = dact.array() * lc.pre_act.unaryExpr([](double v) { return detail::gelu_grad(v); }).array();
    G.w1 = dpre.transpose() * lc.u2;
    G.b1.row(0) = dpre.colwise().sum();
    const Mat du2 = dpre * L.w1;
    Mat dmid = dx + detail::layer_norm_backward(du2, L.ln2_gain, lc.ln2, G.ln2_gain, G.ln2_bias);
    // x_mid = x_in + MHA(LN1(x_in)) W_o + b_o
    G.wo = dmid.transpose() * lc.o;
    G.bo.row(0) = dmid.colwise().sum();
    const Mat d_o = dmid * L.wo;
    Mat dq(n, cfg.width), dk(n, cfg.width), dv(n, cfg.width);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto& a = lc.attn[static_cast<std::size_t>(h)];
      const Mat doh = d_o.middleCols(h * dh, dh);
      const Mat da = doh * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * doh;
      const Mat ds = detail::softmax_rows_backward(a, da) * scale;
      dq.middleCols(h * dh, dh) = ds * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * lc.q.middleCols(h * dh, dh);
    }
    G.wq = dq.transpose() * lc.u;
    G.bq.row(0) = dq.colwise().sum();
    G.wk = dk.transpose() * lc.u;
    G.bk.row(0) = dk.colwise().sum();
    G.wv = dv.transpose() * lc.u;
    G.bv.row(0) = dv.colwise().sum();
    const Mat du = dq * L.wq + dk * L.wk + dv * L.wv;
    dx = dmid + detail::layer_norm_backward(du, L.ln1_gain, lc.ln1, G.ln1_gain, G.ln1_bias);
  }
  if (cfg.positional) g.positional.topRows(n) = dx;
  g.image_w = dx.transpose() * c.raw_frames;
  g.image_b.row(0) = dx.colwise().sum();
  return out;
}

// Loss only, for evaluation and finite-difference checks.
inline LossResult evaluate_loss(const RankerModel& model, const RankerItem& item) {
  const ForwardCache c = forward(model, item.frames, item.text);
  const std::vector<double> scores(c.scores.data(), c.scores.data() + c.scores.size());
  return ranker_loss(scores, item.labels, c.attention, model.config.lambda);
}

}  // namespace vidsum::ranker
