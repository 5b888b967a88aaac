#include "lccal/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lccal {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

RigidTransform RigidTransform::FromMatrix(const Eigen::Matrix4d& m) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

bool RigidTransform::isValid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

RigidTransform relativePose(const RigidTransform& cam, const RigidTransform& lidar) {
  return compose(cam, lidar.inverse());
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d rotationFromEuler(const EulerAngles& e) {
  const Eigen::AngleAxisd rz(e.yaw * kDegToRad, Eigen::Vector3d::UnitZ());
  const Eigen::AngleAxisd ry(e.pitch * kDegToRad, Eigen::Vector3d::UnitY());
  const Eigen::AngleAxisd rx(e.roll * kDegToRad, Eigen::Vector3d::UnitX());
  return (rz * ry * rx).toRotationMatrix();
}

EulerAngles eulerFromRotation(const Eigen::Matrix3d& r) {
  // atan2 for pitch keeps full precision close to +-90 degrees.
  EulerAngles e;
  e.pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0))) * kRadToDeg;
  e.yaw = std::atan2(r(1, 0), r(0, 0)) * kRadToDeg;
  e.roll = std::atan2(r(2, 1), r(2, 2)) * kRadToDeg;
  return e;
}

UnitQuaternion canonicalQuaternion(const Eigen::Vector4d& wxyz) {
  const double n = wxyz.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("quaternion has zero or non-finite norm");
  }
  Eigen::Vector4d q = wxyz / n;
  if (q[0] < 0.0) q = -q;
  return {q[0], q[1], q[2], q[3]};
}

UnitQuaternion quaternionFromRotation(const Eigen::Matrix3d& r) {
  const Eigen::Quaterniond q(r);
  return canonicalQuaternion({q.w(), q.x(), q.y(), q.z()});
}

Eigen::Matrix3d rotationFromQuaternion(const UnitQuaternion& q) {
  return Eigen::Quaterniond(q.w, q.x, q.y, q.z).normalized().toRotationMatrix();
}

UnitQuaternion averageQuaternions(std::span<const UnitQuaternion> quats,
                                  std::span<const double> weights) {
  if (quats.empty()) throw std::invalid_argument("averageQuaternions: no quaternions");
  if (quats.size() != weights.size()) {
    throw std::invalid_argument("averageQuaternions: weight count mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("averageQuaternions: weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("averageQuaternions: all weights are zero");

  // Identical rotations average to themselves without rounding noise.
  const Eigen::Vector4d first = quats[0].vector();
  const bool all_equal = std::all_of(quats.begin(), quats.end(), [&](const UnitQuaternion& q) {
    return q.vector() == first || q.vector() == -first;
  });
  if (all_equal) {
    const Eigen::Vector4d v = first[0] < 0.0 ? Eigen::Vector4d(-first) : first;
    return {v[0], v[1], v[2], v[3]};
  }

  Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
  for (std::size_t i = 0; i < quats.size(); ++i) {
    const Eigen::Vector4d weighted = std::sqrt(weights[i] / total) * quats[i].vector();
    c.noalias() += weighted * weighted.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(c);
  if (solver.info() != Eigen::Success) {
    throw DegenerateAverageError("averageQuaternions: eigen decomposition failed");
  }
  // Eigenvalues come back in increasing order.
  const Eigen::Vector4d& lambda = solver.eigenvalues();
  if (lambda[3] - lambda[2] < 1e-12) {
    throw DegenerateAverageError("averageQuaternions: dominant eigenvalue is not unique");
  }
  return canonicalQuaternion(solver.eigenvectors().col(3));
}

PoseError poseError(const RigidTransform& estimate, const RigidTransform& truth) {
  const EulerAngles ee = eulerFromRotation(estimate.rotation);
  const EulerAngles et = eulerFromRotation(truth.rotation);
  PoseError err;
  err.rotation_deg = (ee.vector() - et.vector()).norm();
  err.translation_m = (estimate.translation - truth.translation).norm();
  err.degenerate = std::abs(ee.pitch) >= kGimbalLockPitchDeg ||
                   std::abs(et.pitch) >= kGimbalLockPitchDeg;
  return err;
}

void MiscalibrationRange::validate() const {
  if (!(rot_bound_deg >= 0.0) || !(trans_bound_m >= 0.0)) {
    throw std::invalid_argument("miscalibration bounds must be nonnegative");
  }
  double sum = 0.0;
  for (double w : axis_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("axis weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("axis weights must sum to 1");
}

RigidTransform samplePerturbation(const MiscalibrationRange& range, std::mt19937_64& rng) {
  range.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto symmetric = [&](double bound) { return (2.0 * unit(rng) - 1.0) * bound; };

  EulerAngles e;
  e.yaw = symmetric(range.rotBound(0));
  e.pitch = symmetric(range.rotBound(1));
  e.roll = symmetric(range.rotBound(2));
  RigidTransform t;
  t.rotation = rotationFromEuler(e);
  for (int k = 0; k < 3; ++k) t.translation[k] = symmetric(range.transBound(k));
  return t;
}

RigidTransform samplePerturbation(const MiscalibrationRange& range, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return samplePerturbation(range, rng);
}

Eigen::Matrix3d expSO3(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    Eigen::Matrix3d skew;
    skew << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
    return orthonormalize(Eigen::Matrix3d::Identity() + skew);
  }
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

}  // namespace lccal
