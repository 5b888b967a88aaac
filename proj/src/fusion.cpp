#include "lccal/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lccal {

void ScoredPoseSet::validate() const {
  if (entries.empty()) throw std::invalid_argument("fuse: empty pose set");
  if (!(selection_ratio > 0.0 && selection_ratio <= 1.0)) {
    throw std::invalid_argument("fuse: selection ratio must lie in (0, 1]");
  }
  for (const auto& e : entries) {
    if (!(e.score > 0.0) || !std::isfinite(e.score)) {
      throw std::invalid_argument("fuse: scores must be positive and finite");
    }
    if (!e.pose.isValid(1e-6)) throw std::invalid_argument("fuse: invalid pose");
  }
}

double scoreSelfSupervised(const RigidTransform& pose, const PointCloud& lidar_cloud,
                           const PointCloud& cam_cloud, const ChamferParams& params) {
  return std::exp(-chamfer(transformCloud(lidar_cloud, pose), cam_cloud, params));
}

double scoreSupervised(const RigidTransform& pose, const RigidTransform& reference) {
  return std::exp(-eulerTranslationDistance(pose, reference));
}

std::size_t selectionCount(double ratio, std::size_t n) {
  // Guard against ratio * n landing a hair above an integer.
  const double raw = ratio * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, n);
}

FusionResult fuse(const ScoredPoseSet& set) {
  set.validate();
  const auto& entries = set.entries;
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].score > entries[b].score;
  });

  FusionResult out;
  const std::size_t k = selectionCount(set.selection_ratio, entries.size());
  out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

  double total = 0.0;
  for (std::size_t i : out.selected) {
    out.weights.push_back(set.weighting == FusionWeighting::kScore ? entries[i].score : 1.0);
    total += out.weights.back();
  }
  for (double& w : out.weights) w /= total;

  std::vector<UnitQuaternion> quats;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& pose = entries[out.selected[j]].pose;
    out.pose.translation += out.weights[j] * pose.translation;
    quats.push_back(quaternionFromRotation(pose.rotation));
  }
  out.pose.rotation = rotationFromQuaternion(averageQuaternions(quats, out.weights));
  return out;
}

}  // namespace lccal
