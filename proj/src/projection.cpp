#include "lccal/projection.hpp"

#include <cmath>
#include <stdexcept>

namespace lccal {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw std::invalid_argument("principal point must lie inside the image");
  }
}

std::size_t DepthImage::validCount() const {
  return static_cast<std::size_t>((depth.array() > 0.0).count());
}

void DepthImage::validate() const {
  intrinsics.validate();
  if (depth.rows() != intrinsics.height || depth.cols() != intrinsics.width) {
    throw std::invalid_argument("depth grid does not match intrinsics");
  }
  if (!depth.allFinite() || (depth.array() < 0.0).any()) {
    throw std::invalid_argument("depth values must be finite and nonnegative");
  }
}

void PointCloud::validate() const {
  if (!intensity.empty() && intensity.size() != points.size()) {
    throw std::invalid_argument("intensity count does not match point count");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("point cloud contains non-finite coordinates");
  }
}

PointCloud transformCloud(const PointCloud& cloud, const RigidTransform& pose) {
  PointCloud out;
  out.intensity = cloud.intensity;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

DepthImage project(const PointCloud& cloud, const RigidTransform& pose,
                   const CameraIntrinsics& intr) {
  intr.validate();
  DepthImage img(intr);
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d c = pose.apply(p);
    if (!(c.z() > 0.0)) continue;
    const double u = std::floor(intr.fx * c.x() / c.z() + intr.cx + 0.5);
    const double v = std::floor(intr.fy * c.y() / c.z() + intr.cy + 0.5);
    if (u < 0.0 || v < 0.0 || u >= intr.width || v >= intr.height) continue;
    double& slot = img.depth(static_cast<int>(v), static_cast<int>(u));
    if (slot == 0.0 || c.z() < slot) slot = c.z();
  }
  return img;
}

PointCloud backProject(const DepthImage& img) {
  const auto& k = img.intrinsics;
  PointCloud cloud;
  cloud.points.reserve(img.validCount());
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const double d = img.depth(v, u);
      if (!(d > 0.0)) continue;
      cloud.points.emplace_back(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
    }
  }
  return cloud;
}

}  // namespace lccal
