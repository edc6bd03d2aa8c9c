#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vidsum/core/error.hpp"
#include "vidsum/core/image.hpp"

namespace vidsum::metrics {

inline constexpr int ssim_window = 11;
inline constexpr double ssim_sigma = 1.5;
inline constexpr double ssim_c1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double ssim_c2 = (0.03 * 255.0) * (0.03 * 255.0);

// Root mean squared per-channel difference, [0, 255] scale.
inline double rmse_image(const Image& a, const Image& b) {
  require_same_shape(a, b);
  const auto& pa = a.pixels();
  const auto& pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pa.size()));
}

namespace detail {

// Normalized 1-D Gaussian of the given length, centred.
inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace detail

// Mean SSIM over every fully-contained window position (no padding) on BT.601
// luma. An axis shorter than 11 uses a window cut to that axis length.
inline double ssim_image(const Image& a, const Image& b) {
  require_same_shape(a, b);
  const int w = a.width();
  const int h = a.height();
  if (w < ssim_window && h < ssim_window) {
    throw ContractError("ssim needs an image at least 11 pixels on one side, got " + std::to_string(w) + "x" +
                        std::to_string(h));
  }
  const int win_x = std::min(ssim_window, w);
  const int win_y = std::min(ssim_window, h);
  const auto gx = detail::gaussian_window(win_x, ssim_sigma);
  const auto gy = detail::gaussian_window(win_y, ssim_sigma);
  const auto la = a.luma_plane();
  const auto lb = b.luma_plane();
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win_y <= h; ++y0) {
    for (int x0 = 0; x0 + win_x <= w; ++x0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int dy = 0; dy < win_y; ++dy) {
        for (int dx = 0; dx < win_x; ++dx) {
          const double wt = gy[static_cast<std::size_t>(dy)] * gx[static_cast<std::size_t>(dx)];
          const auto idx = static_cast<std::size_t>(y0 + dy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x0 + dx);
          const double x = la[idx];
          const double v = lb[idx];
          mx += wt * x;
          my += wt * v;
          sxx += wt * x * x;
          syy += wt * v * v;
          sxy += wt * x * v;
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      total += ((2.0 * mx * my + ssim_c1) * (2.0 * cov + ssim_c2)) /
               ((mx * mx + my * my + ssim_c1) * (vx + vy + ssim_c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace vidsum::metrics
