#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "vidsum/core/error.hpp"
#include "vidsum/core/external.hpp"
#include "vidsum/core/image.hpp"

namespace vidsum::keyframes {

// Dense per-pixel displacement, in pixels per frame interval.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> dx;
  std::vector<double> dy;
};

class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  virtual std::string name() const = 0;
  virtual FlowField estimate(const Image& a, const Image& b) const = 0;
};

// Stand-in for a learned flow network: the per-pixel "displacement" is the
// absolute luma change scaled to [0, 1], carried on the x component.
class IntensityProxyEstimator final : public FlowEstimator {
 public:
  std::string name() const override { return "proxy"; }

  FlowField estimate(const Image& a, const Image& b) const override {
    require_same_shape(a, b);
    FlowField f{a.width(), a.height(), {}, {}};
    const std::size_t n = static_cast<std::size_t>(a.width()) * a.height();
    f.dx.resize(n);
    f.dy.assign(n, 0.0);
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x)
        f.dx[static_cast<std::size_t>(y) * a.width() + x] = std::abs(b.luma(x, y) - a.luma(x, y)) / 255.0;
    return f;
  }
};

// Delegates to an out-of-process flow model. Request:
// {"role":"flow","frame_a":<ppm path>,"frame_b":<ppm path>}; response:
// {"magnitude": <mean displacement>} or {"dx":[...],"dy":[...]} row-major.
class ExternalFlowEstimator final : public FlowEstimator {
 public:
  explicit ExternalFlowEstimator(std::string command) : command_(std::move(command)) {}

  std::string name() const override { return "external"; }

  FlowField estimate(const Image& a, const Image& b) const override {
    require_same_shape(a, b);
    const auto dir = ExternalCommand::scratch_dir();
    const auto pa = dir / ("flow-a-" + std::to_string(a.content_hash()) + ".ppm");
    const auto pb = dir / ("flow-b-" + std::to_string(b.content_hash()) + ".ppm");
    write_file(pa, encode_ppm(a));
    write_file(pb, encode_ppm(b));
    const auto response = command_.call({{"role", "flow"}, {"frame_a", pa.string()}, {"frame_b", pb.string()}});
    const std::size_t n = static_cast<std::size_t>(a.width()) * a.height();
    FlowField f{a.width(), a.height(), {}, {}};
    if (response.contains("dx") && response.contains("dy")) {
      f.dx = response["dx"].get<std::vector<double>>();
      f.dy = response["dy"].get<std::vector<double>>();
      if (f.dx.size() != n || f.dy.size() != n) throw BackendError("external flow field has wrong size");
    } else if (response.contains("magnitude") && response["magnitude"].is_number()) {
      f.dx.assign(n, response["magnitude"].get<double>());
      f.dy.assign(n, 0.0);
    } else {
      throw BackendError("external flow response needs 'magnitude' or 'dx'/'dy'");
    }
    return f;
  }

 private:
  ExternalCommand command_;
};

// Mean Euclidean norm of the displacement field between two frames.
inline double flow_magnitude(const Image& a, const Image& b, const FlowEstimator& estimator) {
  require_same_shape(a, b);
  FlowField f;
  try {
    f = estimator.estimate(a, b);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("flow estimator '" + estimator.name() + "' failed: " + e.what());
  }
  if (f.dx.empty() || f.dx.size() != f.dy.size()) throw BackendError("flow estimator returned an empty field");
  double total = 0.0;
  for (std::size_t i = 0; i < f.dx.size(); ++i) total += std::hypot(f.dx[i], f.dy[i]);
  const double mean = total / static_cast<double>(f.dx.size());
  if (!std::isfinite(mean)) throw NumericError("flow magnitude is not finite");
  return mean;
}

}  // namespace vidsum::keyframes
