#pragma once

#include "lccal/projection.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <vector>

namespace lccal {

/// Relative slack used when comparing consecutive secant slopes. Collinear
/// anchors must count as convex despite rounding in the slope quotient.
inline constexpr double kSlopeTolerance = 1e-12;

/// Default number of anchors kept by selectAnchors.
inline constexpr int kDefaultAnchorCount = 32;

class NoAnchorsError : public std::runtime_error {
 public:
  NoAnchorsError() : std::runtime_error("no anchors") {}
};

class DegenerateAnchorsError : public std::runtime_error {
 public:
  DegenerateAnchorsError() : std::runtime_error("degenerate anchors") {}
};

/// A (normalized camera depth, metric LiDAR depth) correspondence.
struct Anchor {
  double camera = 0.0;  // in [0, 1]
  double lidar = 0.0;   // meters
  bool operator==(const Anchor&) const = default;
};

using AnchorSet = std::vector<Anchor>;

using ValidityMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Relative (unit-less) monocular depth in [0, 1]. Pixels with valid == false
/// carry no estimate.
struct NormalizedDepthImage {
  CameraIntrinsics intrinsics;
  DepthGrid values;
  ValidityMask valid;

  NormalizedDepthImage() = default;
  explicit NormalizedDepthImage(const CameraIntrinsics& intr)
      : intrinsics(intr),
        values(DepthGrid::Zero(intr.height, intr.width)),
        valid(ValidityMask::Constant(intr.height, intr.width, true)) {}

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
  void validate() const;
};

/// One anchor per pixel with LiDAR depth > 0 and a valid camera estimate,
/// sorted by camera depth. Equal camera depths collapse to the pair holding
/// the (lower) median LiDAR depth. Throws NoAnchorsError when nothing overlaps.
AnchorSet extractAnchors(const DepthImage& ldp, const NormalizedDepthImage& cdp);

/// Stage I: split the camera-depth domain into 2T equal bins and keep, per
/// bin, the anchor closest to the bin's least-squares line.
AnchorSet thinCandidates(std::span<const Anchor> sorted, int target_count);

/// Stage II: maximum-cardinality subsequence with strictly increasing camera
/// depth, nondecreasing LiDAR depth and nondecreasing secant slopes. Input
/// must be sorted by camera depth; ties are allowed but at most one anchor
/// per camera value enters the chain. Among equally long chains the one with
/// the smallest final slope wins.
AnchorSet longestConvexChain(std::span<const Anchor> candidates);

/// Reduces a chain to exactly `target_count` anchors spread uniformly over
/// camera depth; both endpoints are kept.
AnchorSet subsampleChain(std::span<const Anchor> chain, int target_count);

/// Full two-stage selection. Throws DegenerateAnchorsError when fewer than
/// two anchors survive.
AnchorSet selectAnchors(std::span<const Anchor> raw, int target_count = kDefaultAnchorCount);

/// True when consecutive triples of `chain` satisfy the monotone-convex
/// constraints (the same predicate the selection uses).
bool isMonotoneConvex(std::span<const Anchor> chain);

/// Both-sided slope test used by selection and validation: s_next >= s_prev
/// up to kSlopeTolerance.
bool slopesNondecreasing(const Anchor& a, const Anchor& b, const Anchor& c);

/// Piecewise-linear map through `anchors`, constant outside their range.
double remapValue(std::span<const Anchor> anchors, double camera_depth);

/// Applies remapValue per valid pixel; invalid pixels become 0.
DepthImage remapDepth(const NormalizedDepthImage& img, std::span<const Anchor> anchors);

struct RefineResult {
  DepthImage depth;
  AnchorSet anchors;
};

RefineResult refineDepth(const DepthImage& ldp, const NormalizedDepthImage& cdp,
                         int target_count = kDefaultAnchorCount);

/// Standard monocular depth quality metrics over pixels where both maps are
/// positive.
struct DepthMetrics {
  std::size_t count = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

DepthMetrics depthMetrics(const DepthImage& prediction, const DepthImage& truth);

}  // namespace lccal
