#pragma once

#include "lccal/config.hpp"
#include "lccal/depth_refine.hpp"
#include "lccal/geometry.hpp"
#include "lccal/projection.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lccal {

class EmptySceneError : public std::runtime_error {
 public:
  EmptySceneError() : std::runtime_error("empty scene") {}
};

/// Finite planar patch: center + s u + t v with |s| <= half_u, |t| <= half_v.
/// `u` and `v` are orthonormal.
struct Rectangle {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v = Eigen::Vector3d::UnitY();
  double half_u = 0.5;
  double half_v = 0.5;

  Eigen::Vector3d normal() const { return u.cross(v); }
  double area() const { return 4.0 * half_u * half_v; }
  /// Ray parameter s > min_s of the hit of origin + s * dir, if any.
  std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                  double min_s = 1e-12) const;
  double distance(const Eigen::Vector3d& p) const;
};

/// World-axis-aligned box.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Constant(0.5);

  std::vector<Rectangle> faces() const;
};

/// How normalized camera depth relates to metric depth.
///   kIdentity: min-max normalized metric depth.
///   kAffine:   seeded affine relative depth, then min-max normalized.
///   kConvexPiecewise: metric = f(normalized) with f increasing, piecewise
///              linear with `breakpoints` interior knots and increasing slopes.
enum class DistortionKind { kIdentity, kAffine, kConvexPiecewise };

/// Monotone map between normalized camera depth and normalized metric depth,
/// stored as knots (camera, metric) from (0, 0) to (1, 1).
struct DepthDistortion {
  DistortionKind kind = DistortionKind::kIdentity;
  std::vector<Anchor> knots{{0.0, 0.0}, {1.0, 1.0}};

  static DepthDistortion Make(DistortionKind kind, int breakpoints, std::uint64_t seed);
  /// Normalized camera depth for normalized metric depth t in [0, 1].
  double toCamera(double t) const;
  /// Normalized metric depth for normalized camera depth c in [0, 1].
  double toMetric(double c) const;
};

struct SceneSpec {
  std::vector<Rectangle> planes;
  std::vector<Box> boxes;
  double lidar_density = 200.0;  // points per square meter
  double lidar_hfov_deg = 360.0;
  double lidar_vfov_deg = 40.0;
  double noise_sigma = 0.01;  // meters
  std::uint64_t seed = 0;
  DistortionKind distortion = DistortionKind::kIdentity;
  int distortion_breakpoints = 4;

  /// Floor, two side walls, an end wall and three boxes; box placement is
  /// jittered by `seed`. Geometry lies within z in [5, 14] so the whole
  /// corridor is inside the default camera frustum from the origin.
  static SceneSpec Corridor(std::uint64_t seed);
  static SceneSpec FromConfig(const KeyValueConfig& config);

  std::vector<Rectangle> surfaces() const;
  void validate() const;
};

struct Scene {
  PointCloud lidar;        // LiDAR frame, with noise
  PointCloud camera;       // camera frame, one point per hit pixel
  DepthImage camera_depth; // true metric depth rendered at cam_pose
  NormalizedDepthImage normalized_cdp;
  DepthDistortion distortion;
  double depth_min = 0.0;
  double depth_max = 0.0;
  RigidTransform truth;    // LiDAR -> camera
};

/// Poses map world coordinates into the respective sensor frame. Throws
/// EmptySceneError when either sensor sees nothing.
Scene generateScene(const SceneSpec& spec, const RigidTransform& lidar_pose,
                    const RigidTransform& cam_pose, const CameraIntrinsics& intr);

/// Distance from a world point to the closest declared surface.
double distanceToScene(const SceneSpec& spec, const Eigen::Vector3d& world_point);

/// A LiDAR pose mounted slightly above and behind the origin camera.
RigidTransform defaultLidarPose();

std::string toString(DistortionKind kind);
DistortionKind distortionFromString(const std::string& name);

}  // namespace lccal
