#pragma once

#include "lccal/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace lccal {

/// Pinhole camera model. Pixel (u, v) = (fx * x / z + cx, fy * y / z + cy).
struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 256.0;
  double cy = 128.0;
  int width = 512;
  int height = 256;

  /// The default virtual camera: 256x512 pixels, focal length 600.
  static CameraIntrinsics VirtualDefault() { return {}; }
  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

using DepthGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Metric depth image, meters; 0 marks a pixel without a measurement.
/// Indexed as depth(v, u) (row = v).
struct DepthImage {
  CameraIntrinsics intrinsics;
  DepthGrid depth;

  DepthImage() = default;
  explicit DepthImage(const CameraIntrinsics& intr)
      : intrinsics(intr), depth(DepthGrid::Zero(intr.height, intr.width)) {}

  int width() const { return static_cast<int>(depth.cols()); }
  int height() const { return static_cast<int>(depth.rows()); }
  std::size_t validCount() const;
  void validate() const;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  /// Either empty or one value per point.
  std::vector<float> intensity;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool hasIntensity() const { return !intensity.empty(); }
  void validate() const;
};

PointCloud transformCloud(const PointCloud& cloud, const RigidTransform& pose);

/// Renders `cloud` after mapping it through `pose` into the camera frame.
/// Points with z <= 0 or outside the image are dropped; nearest-pixel
/// rounding; the closest depth wins on collisions.
DepthImage project(const PointCloud& cloud, const RigidTransform& pose,
                   const CameraIntrinsics& intr);

/// Camera-frame point for every pixel with positive depth, in row-major order.
PointCloud backProject(const DepthImage& img);

}  // namespace lccal
