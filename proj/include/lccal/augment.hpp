#pragma once

#include "lccal/config.hpp"
#include "lccal/geometry.hpp"
#include "lccal/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>

namespace lccal {

class NoOverlapError : public std::runtime_error {
 public:
  NoOverlapError() : std::runtime_error("no overlap") {}
};

/// One LDP/CDP pair with the virtual sensor poses that produced it.
/// Invariant: t_gt = t_cam * t_lidar^-1.
struct AugmentedSample {
  DepthImage ldp;
  DepthImage cdp;
  RigidTransform t_cam;
  RigidTransform t_lidar;
  RigidTransform t_gt;
};

/// Double-sided sampling. Both clouds are expressed in the LiDAR frame.
///   T_cam   = dT_cam * base_extrinsic,   dT_cam   ~ c_cam
///   T_lidar = dT_lidar * T_cam,          dT_lidar ~ c_lidar
/// The CDP is rendered from `cam_depth_cloud` at T_cam, the LDP from
/// `lidar_cloud` at T_lidar. Deterministic per seed; throws NoOverlapError
/// when either rendering is empty.
AugmentedSample generateSample(const PointCloud& lidar_cloud, const PointCloud& cam_depth_cloud,
                               const RigidTransform& base_extrinsic,
                               const MiscalibrationRange& c_cam, const MiscalibrationRange& c_lidar,
                               const CameraIntrinsics& intr, std::uint64_t seed);

/// Single-sided baseline: the CDP always comes from the fixed base camera
/// pose and only the LiDAR side is perturbed.
AugmentedSample generateSingleSided(const PointCloud& lidar_cloud,
                                    const PointCloud& cam_depth_cloud,
                                    const RigidTransform& base_extrinsic,
                                    const MiscalibrationRange& range,
                                    const CameraIntrinsics& intr, std::uint64_t seed);

/// Bundle layout: ldp.pgm, cdp.pgm, t_cam.txt, t_lidar.txt, t_gt.txt and
/// meta.txt (intrinsics plus any caller-supplied keys).
void writeSampleBundle(const std::filesystem::path& dir, const AugmentedSample& sample,
                       const KeyValueConfig& meta);
AugmentedSample readSampleBundle(const std::filesystem::path& dir);

void rangeToConfig(const std::string& prefix, const MiscalibrationRange& range,
                   KeyValueConfig& config);
MiscalibrationRange rangeFromConfig(const std::string& prefix, const KeyValueConfig& config,
                                    const MiscalibrationRange& fallback);

}  // namespace lccal
