#include "lccal/diffmap.hpp"

#include <cmath>
#include <stdexcept>

namespace lccal {

DifferenceMap buildDifferenceMap(const DepthImage& ldp, const DepthImage& cdp_metric,
                                 const DifferenceMapOptions& options) {
  if (ldp.width() != cdp_metric.width() || ldp.height() != cdp_metric.height()) {
    throw std::invalid_argument("buildDifferenceMap: resolution mismatch");
  }
  if (!(options.threshold > 0.0)) {
    throw std::invalid_argument("buildDifferenceMap: threshold must be positive");
  }
  const auto rows = ldp.height();
  const auto cols = ldp.width();
  DifferenceMap map;
  map.threshold = options.threshold;
  map.lidar = ldp.depth;
  map.above = DepthGrid::Zero(rows, cols);
  map.within = DepthGrid::Zero(rows, cols);
  for (int v = 0; v < rows; ++v) {
    for (int u = 0; u < cols; ++u) {
      const double l = ldp.depth(v, u);
      if (options.mask_missing_lidar && l == 0.0) continue;
      const double delta = l - cdp_metric.depth(v, u);
      if (std::abs(delta) > options.threshold) {
        map.above(v, u) = delta;
      } else {
        map.within(v, u) = delta;
      }
    }
  }
  return map;
}

}  // namespace lccal
