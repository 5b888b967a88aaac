#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace lccal {

/// Rigid transform x' = R x + t. As an extrinsic it maps points from the
/// source sensor frame (LiDAR) into the target frame (camera).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform Identity() { return {}; }
  static RigidTransform FromMatrix(const Eigen::Matrix4d& m);

  Eigen::Matrix4d matrix() const;
  RigidTransform inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  /// True when the rotation is orthonormal with determinant +1 within `tol`.
  bool isValid(double tol = 1e-9) const;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

/// cam * lidar^-1: maps points of the `lidar` sensor frame into the `cam`
/// sensor frame when both poses map a shared reference frame into the sensor.
RigidTransform relativePose(const RigidTransform& cam, const RigidTransform& lidar);

/// Nearest rotation matrix in the Frobenius sense (SVD projection).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

// Euler angles ----------------------------------------------------------------

/// Intrinsic Z-Y-X angles in degrees: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Eigen::Vector3d vector() const { return {yaw, pitch, roll}; }
};

/// Pitch magnitude (degrees) at or above which the yaw/roll split is
/// considered ill-defined.
inline constexpr double kGimbalLockPitchDeg = 89.0;

Eigen::Matrix3d rotationFromEuler(const EulerAngles& e);
EulerAngles eulerFromRotation(const Eigen::Matrix3d& r);

// Quaternions -----------------------------------------------------------------

/// Unit quaternion kept in the w >= 0 hemisphere.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector4d vector() const { return {w, x, y, z}; }
};

UnitQuaternion quaternionFromRotation(const Eigen::Matrix3d& r);
Eigen::Matrix3d rotationFromQuaternion(const UnitQuaternion& q);
/// Normalizes and sign-canonicalizes an arbitrary 4-vector (w, x, y, z).
UnitQuaternion canonicalQuaternion(const Eigen::Vector4d& wxyz);

class DegenerateAverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted rotation average: dominant eigenvector of
/// C = sum_i (sqrt(w_i) q_i)(sqrt(w_i) q_i)^T with normalized weights.
/// Throws std::invalid_argument for empty input, size mismatch, negative or
/// all-zero weights; DegenerateAverageError when the top eigenvalue is not
/// separated from the second by at least 1e-12.
UnitQuaternion averageQuaternions(std::span<const UnitQuaternion> quats,
                                  std::span<const double> weights);

// Errors and sampling ---------------------------------------------------------

struct PoseError {
  double rotation_deg = 0.0;   // |euler(estimate) - euler(truth)|_2
  double translation_m = 0.0;  // |t_estimate - t_truth|_2
  bool degenerate = false;     // either rotation is near gimbal lock
};

PoseError poseError(const RigidTransform& estimate, const RigidTransform& truth);

/// Per-axis bounded perturbation range. The first axis weight applies to yaw
/// and x, the second to pitch and y, the third to roll and z.
struct MiscalibrationRange {
  double rot_bound_deg = 0.0;
  double trans_bound_m = 0.0;
  std::array<double, 3> axis_weights{0.6, 0.2, 0.2};

  static MiscalibrationRange Zero() { return {0.0, 0.0, {0.6, 0.2, 0.2}}; }
  void validate() const;
  double rotBound(int axis) const { return axis_weights[axis] * rot_bound_deg; }
  double transBound(int axis) const { return axis_weights[axis] * trans_bound_m; }
};

/// Uniform per-axis Euler and translation perturbation, rotation applied first.
RigidTransform samplePerturbation(const MiscalibrationRange& range, std::mt19937_64& rng);
RigidTransform samplePerturbation(const MiscalibrationRange& range, std::uint64_t seed);

/// SO(3) exponential of an axis-angle vector (radians).
Eigen::Matrix3d expSO3(const Eigen::Vector3d& omega);

}  // namespace lccal
