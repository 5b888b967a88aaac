#pragma once

#include "lccal/projection.hpp"

namespace lccal {

inline constexpr double kDefaultTargetError = 0.1;  // meters

/// Three-channel LiDAR/camera difference image. With delta = ldp - cdp:
/// `above` holds delta where |delta| > threshold, `within` holds delta where
/// |delta| <= threshold; both are 0 elsewhere.
struct DifferenceMap {
  DepthGrid lidar;
  DepthGrid above;
  DepthGrid within;
  double threshold = kDefaultTargetError;
};

struct DifferenceMapOptions {
  double threshold = kDefaultTargetError;
  /// When set, pixels without a LiDAR return get delta = 0 instead of -cdp.
  bool mask_missing_lidar = false;
};

/// Throws std::invalid_argument on resolution mismatch or threshold <= 0.
DifferenceMap buildDifferenceMap(const DepthImage& ldp, const DepthImage& cdp_metric,
                                 const DifferenceMapOptions& options = {});

}  // namespace lccal
