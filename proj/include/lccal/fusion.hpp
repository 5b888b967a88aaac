#pragma once

#include "lccal/geometry.hpp"
#include "lccal/optimize.hpp"
#include "lccal/projection.hpp"

#include <vector>

namespace lccal {

inline constexpr double kDefaultSelectionRatio = 0.5;

struct ScoredPose {
  RigidTransform pose;
  double score = 1.0;
};

enum class FusionWeighting { kScore, kUniform };

/// Per-frame extrinsic estimates with quality scores, in frame order.
struct ScoredPoseSet {
  std::vector<ScoredPose> entries;
  double selection_ratio = kDefaultSelectionRatio;
  FusionWeighting weighting = FusionWeighting::kScore;

  void validate() const;
};

/// exp(-chamfer(pose * lidar, camera)).
double scoreSelfSupervised(const RigidTransform& pose, const PointCloud& lidar_cloud,
                           const PointCloud& cam_cloud, const ChamferParams& params = {});

/// exp(-(a |e_ref - e| + |t_ref - t|)) with a = 0.1 per degree.
double scoreSupervised(const RigidTransform& pose, const RigidTransform& reference);

/// Number of poses kept: ceil(ratio * n), at least 1.
std::size_t selectionCount(double ratio, std::size_t n);

struct FusionResult {
  RigidTransform pose;
  /// Original indices of the selected poses, best score first.
  std::vector<std::size_t> selected;
  std::vector<double> weights;
};

/// Ranks by score (stable, so ties keep frame order), keeps the top
/// ceil(x n), and averages translation linearly and rotation via the
/// weighted quaternion eigen-average.
FusionResult fuse(const ScoredPoseSet& set);

}  // namespace lccal
