#include "lccal/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lccal {
namespace {

std::uint8_t toByte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

void paintLidar(const DepthImage& ldp, RgbImage& out) {
  if (ldp.width() != out.width || ldp.height() != out.height) {
    throw std::invalid_argument("overlay: resolution mismatch");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < ldp.depth.size(); ++i) {
    const double d = ldp.depth.data()[i];
    if (d > 0.0) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  for (Eigen::Index i = 0; i < ldp.depth.size(); ++i) {
    const double d = ldp.depth.data()[i];
    if (!(d > 0.0)) continue;
    const auto c = jetColor(hi > lo ? (d - lo) / (hi - lo) : 0.0);
    std::copy(c.begin(), c.end(), out.pixels.begin() + 3 * i);
  }
}

}  // namespace

std::array<std::uint8_t, 3> jetColor(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = 1.5 - std::abs(4.0 * t - 3.0);
  const double g = 1.5 - std::abs(4.0 * t - 2.0);
  const double b = 1.5 - std::abs(4.0 * t - 1.0);
  return {toByte(r), toByte(g), toByte(b)};
}

RgbImage renderOverlay(const DepthImage& ldp, const DepthImage& background) {
  RgbImage out(background.width(), background.height());
  double hi = 0.0;
  for (Eigen::Index i = 0; i < background.depth.size(); ++i) {
    hi = std::max(hi, background.depth.data()[i]);
  }
  for (Eigen::Index i = 0; i < background.depth.size(); ++i) {
    const double d = background.depth.data()[i];
    // Missing camera depth stays black; the rest spans 40..220 gray.
    const std::uint8_t g = d > 0.0 && hi > 0.0 ? toByte((220.0 - 180.0 * d / hi) / 255.0) : 0;
    std::fill_n(out.pixels.begin() + 3 * i, 3, g);
  }
  paintLidar(ldp, out);
  return out;
}

RgbImage renderOverlay(const DepthImage& ldp, const RgbImage& background) {
  RgbImage out = background;
  paintLidar(ldp, out);
  return out;
}

void writeOverlay(const std::filesystem::path& path, const DepthImage& ldp,
                  const DepthImage& background) {
  writePpm(path, renderOverlay(ldp, background));
}

void writeOverlay(const std::filesystem::path& path, const DepthImage& ldp,
                  const RgbImage& background) {
  writePpm(path, renderOverlay(ldp, background));
}

}  // namespace lccal
