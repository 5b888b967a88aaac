#include "lccal/augment.hpp"

#include "lccal/io.hpp"

#include <iomanip>
#include <random>
#include <sstream>

namespace lccal {
namespace {

// Independent streams for the two sides so that the LiDAR perturbation of a
// seed does not depend on whether the camera side is sampled.
std::mt19937_64 sideStream(std::uint64_t seed, std::uint64_t side) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(side)};
  return std::mt19937_64(seq);
}

AugmentedSample render(const PointCloud& lidar_cloud, const PointCloud& cam_depth_cloud,
                       const RigidTransform& t_cam, const RigidTransform& t_lidar,
                       const CameraIntrinsics& intr) {
  if (lidar_cloud.empty() || cam_depth_cloud.empty()) {
    throw std::invalid_argument("augment: clouds must be non-empty");
  }
  AugmentedSample s;
  s.t_cam = t_cam;
  s.t_lidar = t_lidar;
  s.t_gt = relativePose(t_cam, t_lidar);
  s.cdp = project(cam_depth_cloud, t_cam, intr);
  s.ldp = project(lidar_cloud, t_lidar, intr);
  if (s.cdp.validCount() == 0 || s.ldp.validCount() == 0) throw NoOverlapError();
  return s;
}

}  // namespace

AugmentedSample generateSample(const PointCloud& lidar_cloud, const PointCloud& cam_depth_cloud,
                               const RigidTransform& base_extrinsic,
                               const MiscalibrationRange& c_cam, const MiscalibrationRange& c_lidar,
                               const CameraIntrinsics& intr, std::uint64_t seed) {
  auto cam_rng = sideStream(seed, 0);
  auto lidar_rng = sideStream(seed, 1);
  const RigidTransform t_cam = samplePerturbation(c_cam, cam_rng) * base_extrinsic;
  const RigidTransform t_lidar = samplePerturbation(c_lidar, lidar_rng) * t_cam;
  return render(lidar_cloud, cam_depth_cloud, t_cam, t_lidar, intr);
}

AugmentedSample generateSingleSided(const PointCloud& lidar_cloud,
                                    const PointCloud& cam_depth_cloud,
                                    const RigidTransform& base_extrinsic,
                                    const MiscalibrationRange& range,
                                    const CameraIntrinsics& intr, std::uint64_t seed) {
  return generateSample(lidar_cloud, cam_depth_cloud, base_extrinsic, MiscalibrationRange::Zero(),
                        range, intr, seed);
}

void writeSampleBundle(const std::filesystem::path& dir, const AugmentedSample& sample,
                       const KeyValueConfig& meta) {
  std::filesystem::create_directories(dir);
  writeDepthPgm(dir / "ldp.pgm", sample.ldp);
  writeDepthPgm(dir / "cdp.pgm", sample.cdp);
  writePose(dir / "t_cam.txt", sample.t_cam);
  writePose(dir / "t_lidar.txt", sample.t_lidar);
  writePose(dir / "t_gt.txt", sample.t_gt);
  KeyValueConfig m = meta;
  intrinsicsToConfig(sample.ldp.intrinsics, m);
  m.save(dir / "meta.txt");
}

AugmentedSample readSampleBundle(const std::filesystem::path& dir) {
  const KeyValueConfig meta = KeyValueConfig::load(dir / "meta.txt");
  const CameraIntrinsics intr = intrinsicsFromConfig(meta);
  AugmentedSample s;
  s.ldp = readDepthPgm(dir / "ldp.pgm", intr);
  s.cdp = readDepthPgm(dir / "cdp.pgm", intr);
  s.t_cam = readPose(dir / "t_cam.txt");
  s.t_lidar = readPose(dir / "t_lidar.txt");
  s.t_gt = readPose(dir / "t_gt.txt");
  return s;
}

void rangeToConfig(const std::string& prefix, const MiscalibrationRange& range,
                   KeyValueConfig& config) {
  config.set(prefix + "_rot_deg", range.rot_bound_deg);
  config.set(prefix + "_trans_m", range.trans_bound_m);
  std::ostringstream w;
  w << std::setprecision(17) << range.axis_weights[0] << ',' << range.axis_weights[1] << ','
    << range.axis_weights[2];
  config.set(prefix + "_axis_weights", w.str());
}

MiscalibrationRange rangeFromConfig(const std::string& prefix, const KeyValueConfig& config,
                                    const MiscalibrationRange& fallback) {
  MiscalibrationRange r = fallback;
  r.rot_bound_deg = config.getDouble(prefix + "_rot_deg", r.rot_bound_deg);
  r.trans_bound_m = config.getDouble(prefix + "_trans_m", r.trans_bound_m);
  const auto w = config.getDoubles(prefix + "_axis_weights",
                                   {r.axis_weights[0], r.axis_weights[1], r.axis_weights[2]});
  if (w.size() != 3) throw ConfigError(prefix + "_axis_weights: expected 3 values");
  r.axis_weights = {w[0], w[1], w[2]};
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + ": " + e.what());
  }
  return r;
}

}  // namespace lccal
