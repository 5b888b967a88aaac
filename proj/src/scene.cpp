#include "lccal/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace lccal {

std::optional<double> Rectangle::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                           double min_s) const {
  const Eigen::Vector3d n = normal();
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double s = n.dot(center - origin) / denom;
  if (!(s > min_s)) return std::nullopt;
  const Eigen::Vector3d local = origin + s * dir - center;
  if (std::abs(local.dot(u)) > half_u || std::abs(local.dot(v)) > half_v) return std::nullopt;
  return s;
}

double Rectangle::distance(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d d = p - center;
  const double a = std::clamp(d.dot(u), -half_u, half_u);
  const double b = std::clamp(d.dot(v), -half_v, half_v);
  return (p - (center + a * u + b * v)).norm();
}

std::vector<Rectangle> Box::faces() const {
  std::vector<Rectangle> out;
  const Eigen::Vector3d& h = half_extents;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    for (double sign : {-1.0, 1.0}) {
      Rectangle r;
      r.center = center;
      r.center[axis] += sign * h[axis];
      r.u = Eigen::Vector3d::Unit(a);
      r.v = Eigen::Vector3d::Unit(b);
      r.half_u = h[a];
      r.half_v = h[b];
      out.push_back(r);
    }
  }
  return out;
}

// Distortion -----------------------------------------------------------------

namespace {

double interpolate(const std::vector<Anchor>& knots, double x, bool inverse) {
  auto key = [&](const Anchor& a) { return inverse ? a.lidar : a.camera; };
  auto value = [&](const Anchor& a) { return inverse ? a.camera : a.lidar; };
  if (x <= key(knots.front())) return value(knots.front());
  if (x >= key(knots.back())) return value(knots.back());
  std::size_t i = 1;
  while (key(knots[i]) < x) ++i;
  const Anchor& lo = knots[i - 1];
  const Anchor& hi = knots[i];
  return value(lo) + (value(hi) - value(lo)) * (x - key(lo)) / (key(hi) - key(lo));
}

}  // namespace

DepthDistortion DepthDistortion::Make(DistortionKind kind, int breakpoints, std::uint64_t seed) {
  DepthDistortion d;
  d.kind = kind;
  if (kind != DistortionKind::kConvexPiecewise) return d;
  if (breakpoints < 0) throw std::invalid_argument("distortion breakpoints must be nonnegative");

  std::mt19937_64 rng(seed ^ 0x5eedd15701e5ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> xs{0.0, 1.0};
  while (static_cast<int>(xs.size()) < breakpoints + 2) {
    const double x = 0.05 + 0.9 * unit(rng);
    // Keep knots apart so each segment spans a visible depth band.
    if (std::all_of(xs.begin(), xs.end(), [&](double y) { return std::abs(x - y) > 0.02; })) {
      xs.push_back(x);
    }
  }
  std::sort(xs.begin(), xs.end());
  double slope = 0.3 + 0.4 * unit(rng);
  std::vector<double> ys{0.0};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    ys.push_back(ys.back() + slope * (xs[i] - xs[i - 1]));
    slope *= 1.3 + 0.7 * unit(rng);
  }
  d.knots.clear();
  for (std::size_t i = 0; i < xs.size(); ++i) d.knots.push_back({xs[i], ys[i] / ys.back()});
  d.knots.back() = {1.0, 1.0};
  return d;
}

double DepthDistortion::toCamera(double t) const { return interpolate(knots, t, true); }
double DepthDistortion::toMetric(double c) const { return interpolate(knots, c, false); }

std::string toString(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kIdentity: return "identity";
    case DistortionKind::kAffine: return "affine";
    case DistortionKind::kConvexPiecewise: return "convex";
  }
  return "identity";
}

DistortionKind distortionFromString(const std::string& name) {
  if (name == "identity") return DistortionKind::kIdentity;
  if (name == "affine") return DistortionKind::kAffine;
  if (name == "convex") return DistortionKind::kConvexPiecewise;
  throw ConfigError("unknown distortion '" + name + "' (identity|affine|convex)");
}

// Scene spec -----------------------------------------------------------------

namespace {

Rectangle makeRect(const Eigen::Vector3d& c, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                   double hu, double hv) {
  return {c, u.normalized(), v.normalized(), hu, hv};
}

// Corridor in a camera-style world frame: x right, y down, z forward.
constexpr double kHalfWidth = 1.5;
constexpr double kFloorY = 1.0;
constexpr double kCeilingY = -1.0;
constexpr double kNearZ = 5.0;
constexpr double kFarZ = 14.0;

}  // namespace

SceneSpec SceneSpec::Corridor(std::uint64_t seed) {
  using V = Eigen::Vector3d;
  SceneSpec s;
  s.seed = seed;
  const double mid_z = 0.5 * (kNearZ + kFarZ);
  const double half_len = 0.5 * (kFarZ - kNearZ);
  const double mid_y = 0.5 * (kFloorY + kCeilingY);
  const double half_h = 0.5 * (kFloorY - kCeilingY);
  s.planes.push_back(makeRect({0, kFloorY, mid_z}, V::UnitX(), V::UnitZ(), kHalfWidth, half_len));
  s.planes.push_back(makeRect({-kHalfWidth, mid_y, mid_z}, V::UnitZ(), V::UnitY(), half_len, half_h));
  s.planes.push_back(makeRect({kHalfWidth, mid_y, mid_z}, V::UnitZ(), V::UnitY(), half_len, half_h));
  s.planes.push_back(makeRect({0, mid_y, kFarZ}, V::UnitX(), V::UnitY(), kHalfWidth, half_h));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<V, 3> sizes{V(0.30, 0.40, 0.30), V(0.25, 0.25, 0.40), V(0.35, 0.55, 0.25)};
  const std::array<double, 3> slots{6.5, 9.0, 11.5};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const V& h = sizes[i];
    const double x = (2.0 * unit(rng) - 1.0) * (kHalfWidth - h.x() - 0.05);
    const double z = slots[i] + (2.0 * unit(rng) - 1.0) * 0.8;
    s.boxes.push_back({V(x, kFloorY - h.y(), z), h});
  }
  return s;
}

std::vector<Rectangle> SceneSpec::surfaces() const {
  std::vector<Rectangle> out = planes;
  for (const auto& b : boxes) {
    const auto f = b.faces();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

void SceneSpec::validate() const {
  if (!(lidar_density > 0.0)) throw std::invalid_argument("lidar density must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
  if (!(lidar_hfov_deg > 0.0 && lidar_hfov_deg <= 360.0) ||
      !(lidar_vfov_deg > 0.0 && lidar_vfov_deg <= 180.0)) {
    throw std::invalid_argument("lidar field of view out of range");
  }
  for (const auto& p : planes) {
    if (!(p.half_u > 0.0 && p.half_v > 0.0)) throw std::invalid_argument("plane extents must be positive");
    if (std::abs(p.u.norm() - 1.0) > 1e-9 || std::abs(p.v.norm() - 1.0) > 1e-9 ||
        std::abs(p.u.dot(p.v)) > 1e-9) {
      throw std::invalid_argument("plane axes must be orthonormal");
    }
  }
  for (const auto& b : boxes) {
    if (!(b.half_extents.array() > 0.0).all()) throw std::invalid_argument("box extents must be positive");
  }
}

SceneSpec SceneSpec::FromConfig(const KeyValueConfig& config) {
  const auto seed = static_cast<std::uint64_t>(config.getInt("seed", 0));
  SceneSpec s;
  bool custom = false;
  for (const auto& [key, value] : config.values()) {
    if (key.rfind("plane.", 0) == 0) {
      const auto v = config.getDoubles(key, {});
      if (v.size() != 11) throw ConfigError(key + ": expected cx cy cz ux uy uz vx vy vz half_u half_v");
      s.planes.push_back(makeRect({v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9], v[10]));
      custom = true;
    } else if (key.rfind("box.", 0) == 0) {
      const auto v = config.getDoubles(key, {});
      if (v.size() != 6) throw ConfigError(key + ": expected cx cy cz hx hy hz");
      s.boxes.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
      custom = true;
    }
  }
  const std::string kind = config.getString("scene", custom ? "custom" : "corridor");
  if (kind == "corridor") {
    if (custom) throw ConfigError("scene = corridor cannot be combined with plane./box. keys");
    s = Corridor(seed);
  } else if (kind != "custom") {
    throw ConfigError("unknown scene '" + kind + "' (corridor|custom)");
  }
  s.seed = seed;
  s.lidar_density = config.getDouble("lidar_density", s.lidar_density);
  s.lidar_hfov_deg = config.getDouble("lidar_hfov_deg", s.lidar_hfov_deg);
  s.lidar_vfov_deg = config.getDouble("lidar_vfov_deg", s.lidar_vfov_deg);
  s.noise_sigma = config.getDouble("noise_sigma", s.noise_sigma);
  s.distortion = distortionFromString(config.getString("distortion", "identity"));
  s.distortion_breakpoints = static_cast<int>(config.getInt("distortion_breakpoints", s.distortion_breakpoints));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  return s;
}

RigidTransform defaultLidarPose() {
  // Sensor body orientation and position in the world; the pose is its inverse.
  RigidTransform body;
  body.rotation = rotationFromEuler({1.5, -1.0, 0.5});
  body.translation = {0.05, -0.20, -0.10};
  return body.inverse();
}

// Generation -----------------------------------------------------------------

namespace {

std::optional<double> firstHit(const std::vector<Rectangle>& surfaces, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir) {
  std::optional<double> best;
  for (const auto& r : surfaces) {
    if (const auto s = r.intersect(origin, dir); s && (!best || *s < *best)) best = s;
  }
  return best;
}

bool occluded(const std::vector<Rectangle>& surfaces, const Eigen::Vector3d& origin,
              const Eigen::Vector3d& target) {
  const Eigen::Vector3d dir = target - origin;
  for (const auto& r : surfaces) {
    if (const auto s = r.intersect(origin, dir); s && *s < 1.0 - 1e-6) return true;
  }
  return false;
}

}  // namespace

Scene generateScene(const SceneSpec& spec, const RigidTransform& lidar_pose,
                    const RigidTransform& cam_pose, const CameraIntrinsics& intr) {
  spec.validate();
  intr.validate();
  const std::vector<Rectangle> surfaces = spec.surfaces();
  Scene scene;
  scene.truth = relativePose(cam_pose, lidar_pose);

  // Camera: one ray per pixel center, nearest surface wins.
  const RigidTransform cam_to_world = cam_pose.inverse();
  const Eigen::Vector3d cam_origin = cam_to_world.translation;
  scene.camera_depth = DepthImage(intr);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d ray((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      // Ray parameter equals camera-frame depth because ray.z() == 1.
      if (const auto s = firstHit(surfaces, cam_origin, cam_to_world.rotation * ray)) {
        scene.camera_depth.depth(v, u) = *s;
      }
    }
  }
  scene.camera = backProject(scene.camera_depth);

  // LiDAR: stratified jittered samples per surface, kept when inside the
  // field of view and not hidden behind a nearer surface.
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const RigidTransform lidar_to_world = lidar_pose.inverse();
  const Eigen::Vector3d lidar_origin = lidar_to_world.translation;
  const double cell = 1.0 / std::sqrt(spec.lidar_density);
  const double half_h = 0.5 * spec.lidar_hfov_deg * std::numbers::pi / 180.0;
  const double half_v = 0.5 * spec.lidar_vfov_deg * std::numbers::pi / 180.0;
  for (const auto& r : surfaces) {
    const int nu = std::max(1, static_cast<int>(std::ceil(2.0 * r.half_u / cell)));
    const int nv = std::max(1, static_cast<int>(std::ceil(2.0 * r.half_v / cell)));
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const double a = -r.half_u + 2.0 * r.half_u * (i + unit(rng)) / nu;
        const double b = -r.half_v + 2.0 * r.half_v * (j + unit(rng)) / nv;
        const Eigen::Vector3d world = r.center + a * r.u + b * r.v;
        const Eigen::Vector3d local = lidar_pose.apply(world);
        const double azimuth = std::atan2(local.x(), local.z());
        const double elevation = std::atan2(-local.y(), std::hypot(local.x(), local.z()));
        if (std::abs(azimuth) > half_h || std::abs(elevation) > half_v) continue;
        if (occluded(surfaces, lidar_origin, world)) continue;
        Eigen::Vector3d noisy = local;
        if (spec.noise_sigma > 0.0) {
          for (int k = 0; k < 3; ++k) noisy[k] += spec.noise_sigma * noise(rng);
        }
        scene.lidar.points.push_back(noisy);
      }
    }
  }
  if (scene.lidar.empty() || scene.camera.empty()) throw EmptySceneError();

  // Normalized camera depth through the selected distortion.
  scene.distortion = DepthDistortion::Make(spec.distortion, spec.distortion_breakpoints, spec.seed);
  const DepthGrid& z = scene.camera_depth.depth;
  const auto valid = (z.array() > 0.0).eval();
  scene.depth_min = valid.select(z.array(), std::numeric_limits<double>::infinity()).minCoeff();
  scene.depth_max = valid.select(z.array(), 0.0).maxCoeff();
  const double range = scene.depth_max - scene.depth_min;

  scene.normalized_cdp = NormalizedDepthImage(intr);
  scene.normalized_cdp.valid = valid;
  DepthGrid raw = DepthGrid::Zero(intr.height, intr.width);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (!valid(v, u)) continue;
      const double t = range > 0.0 ? (z(v, u) - scene.depth_min) / range : 0.0;
      switch (spec.distortion) {
        case DistortionKind::kIdentity: raw(v, u) = t; break;
        case DistortionKind::kAffine: raw(v, u) = 0.37 * z(v, u) + 2.5; break;
        case DistortionKind::kConvexPiecewise: raw(v, u) = scene.distortion.toCamera(t); break;
      }
    }
  }
  const double lo = valid.select(raw.array(), std::numeric_limits<double>::infinity()).minCoeff();
  const double hi = valid.select(raw.array(), -std::numeric_limits<double>::infinity()).maxCoeff();
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      if (valid(v, u)) {
        scene.normalized_cdp.values(v, u) = hi > lo ? std::clamp((raw(v, u) - lo) / (hi - lo), 0.0, 1.0) : 0.0;
      }
    }
  }
  return scene;
}

double distanceToScene(const SceneSpec& spec, const Eigen::Vector3d& world_point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : spec.surfaces()) best = std::min(best, r.distance(world_point));
  return best;
}

}  // namespace lccal
