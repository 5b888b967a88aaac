#include "lccal/geometry.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <array>

using namespace lccal;

namespace {

RigidTransform randomTransform(std::mt19937_64& rng) {
  RigidTransform t;
  t.rotation = oracle::randomRotation(rng);
  t.translation = oracle::randomVector(rng, 5.0);
  return t;
}

UnitQuaternion fromVector(const Eigen::Vector4d& v) { return canonicalQuaternion(v); }

}  // namespace

TEST(Compose, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  const RigidTransform t = randomTransform(rng);
  const RigidTransform c = compose(RigidTransform::Identity(), t);
  EXPECT_EQ(c.rotation, t.rotation);
  EXPECT_EQ(c.translation, t.translation);
}

TEST(Compose, WithInverseIsIdentity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = randomTransform(rng);
    const RigidTransform c = t * t.inverse();
    EXPECT_LT((c.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-9);
    EXPECT_LT(c.translation.norm(), 1e-9);
  }
}

TEST(Compose, MatchesHomogeneousProduct) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform a = randomTransform(rng);
    const RigidTransform b = randomTransform(rng);
    const Eigen::Matrix4d expected = oracle::homogeneous(a.rotation, a.translation) *
                                     oracle::homogeneous(b.rotation, b.translation);
    EXPECT_LT(((a * b).matrix() - expected).norm(), 1e-12);
  }
}

TEST(RigidTransform, FromMatrixRoundTrip) {
  std::mt19937_64 rng(4);
  const RigidTransform t = randomTransform(rng);
  const RigidTransform u = RigidTransform::FromMatrix(t.matrix());
  EXPECT_EQ(u.rotation, t.rotation);
  EXPECT_EQ(u.translation, t.translation);
  EXPECT_TRUE(u.isValid());
}

TEST(RigidTransform, IsValidRejectsReflection) {
  RigidTransform t;
  t.rotation(0, 0) = -1.0;
  EXPECT_FALSE(t.isValid());
  t.rotation = 2.0 * Eigen::Matrix3d::Identity();
  EXPECT_FALSE(t.isValid());
}

TEST(RelativePose, SpecialCases) {
  std::mt19937_64 rng(5);
  const RigidTransform cam = randomTransform(rng);
  const RigidTransform same = relativePose(cam, cam);
  EXPECT_LT((same.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(same.translation.norm(), 1e-12);
  const RigidTransform r = relativePose(cam, RigidTransform::Identity());
  EXPECT_LT((r.matrix() - cam.matrix()).norm(), 1e-12);
}

TEST(RelativePose, RecomposesToCamera) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform cam = randomTransform(rng);
    const RigidTransform lidar = randomTransform(rng);
    const RigidTransform back = relativePose(cam, lidar) * lidar;
    EXPECT_LT((back.matrix() - cam.matrix()).norm(), 1e-9);
  }
}

TEST(Orthonormalize, ProjectsPerturbedRotation) {
  std::mt19937_64 rng(7);
  const Eigen::Matrix3d r = oracle::randomRotation(rng);
  Eigen::Matrix3d noisy = r;
  noisy(0, 1) += 1e-4;
  const Eigen::Matrix3d o = orthonormalize(noisy);
  EXPECT_LT((o * o.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_NEAR(o.determinant(), 1.0, 1e-12);
  EXPECT_LT((o - r).norm(), 1e-4);
}

TEST(Euler, MatchesElementaryRotations) {
  const EulerAngles e{30.0, -20.0, 10.0};
  const Eigen::Matrix3d expected =
      oracle::rotZ(oracle::rad(30.0)) * oracle::rotY(oracle::rad(-20.0)) * oracle::rotX(oracle::rad(10.0));
  EXPECT_LT((rotationFromEuler(e) - expected).norm(), 1e-14);
}

TEST(Euler, RoundTripOutsideGimbalLock) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> yaw(-179.9, 179.9), pitch(-88.9, 88.9);
  for (int i = 0; i < 2000; ++i) {
    const EulerAngles e{yaw(rng), pitch(rng), yaw(rng)};
    const EulerAngles back = eulerFromRotation(rotationFromEuler(e));
    EXPECT_NEAR(back.yaw, e.yaw, 1e-9);
    EXPECT_NEAR(back.pitch, e.pitch, 1e-9);
    EXPECT_NEAR(back.roll, e.roll, 1e-9);
  }
}

TEST(Euler, MatchesQuaternionOracle) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Matrix3d r = oracle::randomTameRotation(rng);
    const EulerAngles e = eulerFromRotation(r);
    const auto o = oracle::eulerViaQuaternion(r);
    EXPECT_NEAR(e.yaw, o[0], 1e-7);
    EXPECT_NEAR(e.pitch, o[1], 1e-7);
    EXPECT_NEAR(e.roll, o[2], 1e-7);
  }
}

TEST(PoseError, ZeroForEqualPoses) {
  std::mt19937_64 rng(10);
  RigidTransform t;
  t.rotation = oracle::randomTameRotation(rng);
  t.translation = {1, 2, 3};
  const PoseError e = poseError(t, t);
  EXPECT_EQ(e.rotation_deg, 0.0);
  EXPECT_EQ(e.translation_m, 0.0);
  EXPECT_FALSE(e.degenerate);
}

TEST(PoseError, YawOffset) {
  RigidTransform truth;
  RigidTransform est;
  est.rotation = rotationFromEuler({5.0, 0.0, 0.0});
  const PoseError e = poseError(est, truth);
  EXPECT_NEAR(e.rotation_deg, 5.0, 1e-12);
  EXPECT_EQ(e.translation_m, 0.0);
}

TEST(PoseError, MatchesEulerOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    RigidTransform a, b;
    a.rotation = oracle::randomTameRotation(rng);
    b.rotation = oracle::randomTameRotation(rng);
    a.translation = oracle::randomVector(rng, 2.0);
    b.translation = oracle::randomVector(rng, 2.0);
    const auto ea = oracle::eulerViaQuaternion(a.rotation);
    const auto eb = oracle::eulerViaQuaternion(b.rotation);
    const double expected = std::sqrt(std::pow(ea[0] - eb[0], 2) + std::pow(ea[1] - eb[1], 2) +
                                      std::pow(ea[2] - eb[2], 2));
    const PoseError e = poseError(a, b);
    EXPECT_NEAR(e.rotation_deg, expected, 1e-6);
    EXPECT_NEAR(e.translation_m, (a.translation - b.translation).norm(), 1e-15);
    EXPECT_EQ(e.translation_m, poseError(b, a).translation_m);
  }
}

TEST(PoseError, FlagsGimbalLock) {
  RigidTransform est;
  est.rotation = rotationFromEuler({0.0, 89.5, 0.0});
  EXPECT_TRUE(poseError(est, RigidTransform::Identity()).degenerate);
  EXPECT_TRUE(poseError(RigidTransform::Identity(), est).degenerate);
}

TEST(Quaternion, ConversionRoundTrip) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Matrix3d r = oracle::randomRotation(rng);
    const UnitQuaternion q = quaternionFromRotation(r);
    EXPECT_GE(q.w, 0.0);
    EXPECT_NEAR(q.vector().norm(), 1.0, 1e-12);
    EXPECT_LT((rotationFromQuaternion(q) - r).norm(), 1e-12);
  }
}

TEST(AverageQuaternions, CopiesReturnInput) {
  std::mt19937_64 rng(13);
  const UnitQuaternion q = quaternionFromRotation(oracle::randomRotation(rng));
  const std::vector<UnitQuaternion> qs(5, q);
  const std::vector<double> ws{0.1, 2.0, 3.0, 0.5, 7.0};
  const UnitQuaternion avg = averageQuaternions(qs, ws);
  EXPECT_EQ(avg.vector(), q.vector());
}

TEST(AverageQuaternions, BisectsTwoRotationsAboutOneAxis) {
  const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, -1).normalized();
  const double t1 = 0.3, t2 = 1.1;
  const std::vector<UnitQuaternion> qs{quaternionFromRotation(expSO3(t1 * axis)),
                                       quaternionFromRotation(expSO3(t2 * axis))};
  const std::vector<double> ws{1.0, 1.0};
  const UnitQuaternion avg = averageQuaternions(qs, ws);
  const UnitQuaternion expected = quaternionFromRotation(expSO3(0.5 * (t1 + t2) * axis));
  EXPECT_LT((avg.vector() - expected.vector()).norm(), 1e-12);
}

TEST(AverageQuaternions, InvariantUnderSignFlip) {
  std::mt19937_64 rng(14);
  std::vector<UnitQuaternion> qs;
  std::vector<double> ws;
  const Eigen::Matrix3d base = oracle::randomRotation(rng);
  for (int i = 0; i < 6; ++i) {
    qs.push_back(quaternionFromRotation(expSO3(oracle::randomVector(rng, 0.2)) * base));
    ws.push_back(0.5 + i);
  }
  const UnitQuaternion a = averageQuaternions(qs, ws);
  // Build flipped inputs without canonicalization.
  std::vector<UnitQuaternion> flipped = qs;
  for (auto& q : flipped) q = {-q.w, -q.x, -q.y, -q.z};
  const UnitQuaternion b = averageQuaternions(flipped, ws);
  EXPECT_LT((a.vector() - b.vector()).norm(), 1e-12);
}

TEST(AverageQuaternions, MatchesJacobiOracle) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<UnitQuaternion> qs;
    std::vector<Eigen::Vector4d> raw;
    std::vector<double> ws;
    for (int i = 0; i < 3; ++i) {
      qs.push_back(quaternionFromRotation(oracle::randomRotation(rng)));
      raw.push_back(qs.back().vector());
      ws.push_back(w(rng));
    }
    const Eigen::Vector4d expected = oracle::averageQuaternionOracle(raw, ws);
    EXPECT_LT((averageQuaternions(qs, ws).vector() - expected).norm(), 1e-9);
  }
}

TEST(AverageQuaternions, Errors) {
  const std::vector<UnitQuaternion> one{UnitQuaternion{}};
  const std::vector<double> zero{0.0};
  const std::vector<double> negative{-1.0};
  const std::vector<double> two{1.0, 1.0};
  EXPECT_THROW(averageQuaternions({}, {}), std::invalid_argument);
  EXPECT_THROW(averageQuaternions(one, zero), std::invalid_argument);
  EXPECT_THROW(averageQuaternions(one, negative), std::invalid_argument);
  EXPECT_THROW(averageQuaternions(one, two), std::invalid_argument);
  // Opposite 180-degree rotations about orthogonal axes: top eigenvalue is double.
  const std::vector<UnitQuaternion> tie{fromVector({0, 1, 0, 0}), fromVector({0, 0, 1, 0})};
  EXPECT_THROW(averageQuaternions(tie, two), DegenerateAverageError);
}

TEST(Perturbation, ZeroRangeIsIdentity) {
  const RigidTransform t = samplePerturbation(MiscalibrationRange::Zero(), 42);
  EXPECT_EQ(t.rotation, Eigen::Matrix3d::Identity());
  EXPECT_EQ(t.translation, Eigen::Vector3d::Zero());
}

TEST(Perturbation, PerAxisBounds) {
  const MiscalibrationRange range{5.0, 0.5, {0.6, 0.2, 0.2}};
  EXPECT_DOUBLE_EQ(range.rotBound(0), 3.0);
  EXPECT_DOUBLE_EQ(range.rotBound(1), 1.0);
  EXPECT_DOUBLE_EQ(range.rotBound(2), 1.0);
  EXPECT_DOUBLE_EQ(range.transBound(0), 0.3);
  EXPECT_DOUBLE_EQ(range.transBound(1), 0.1);
  EXPECT_DOUBLE_EQ(range.transBound(2), 0.1);
}

TEST(Perturbation, DeterministicPerSeed) {
  const MiscalibrationRange range{5.0, 0.5};
  const RigidTransform a = samplePerturbation(range, 7);
  const RigidTransform b = samplePerturbation(range, 7);
  const RigidTransform c = samplePerturbation(range, 8);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_NE(a.matrix(), c.matrix());
}

TEST(Perturbation, UniformWithinBounds) {
  const MiscalibrationRange range{5.0, 0.5};
  std::mt19937_64 rng(16);
  constexpr int kSamples = 10000;
  constexpr int kBins = 10;
  std::array<std::array<int, kBins>, 6> counts{};
  std::array<double, 6> max_abs{};
  for (int i = 0; i < kSamples; ++i) {
    const RigidTransform t = samplePerturbation(range, rng);
    const EulerAngles e = eulerFromRotation(t.rotation);
    const std::array<double, 6> v{e.yaw, e.pitch, e.roll, t.translation.x(), t.translation.y(),
                                  t.translation.z()};
    for (int k = 0; k < 6; ++k) {
      const double bound = k < 3 ? range.rotBound(k) : range.transBound(k - 3);
      max_abs[k] = std::max(max_abs[k], std::abs(v[k]));
      ASSERT_LE(std::abs(v[k]), bound + 1e-9);
      const int bin = std::min(kBins - 1, static_cast<int>((v[k] + bound) / (2 * bound) * kBins));
      ++counts[k][bin];
    }
  }
  for (int k = 0; k < 6; ++k) {
    const double bound = k < 3 ? range.rotBound(k) : range.transBound(k - 3);
    EXPECT_GT(max_abs[k], 0.99 * bound);
    double chi2 = 0.0;
    const double expected = kSamples / static_cast<double>(kBins);
    for (int c : counts[k]) chi2 += (c - expected) * (c - expected) / expected;
    // 9 degrees of freedom; 27.88 is the 0.999 quantile.
    EXPECT_LT(chi2, 27.88) << "axis " << k;
  }
}

TEST(MiscalibrationRange, Validation) {
  EXPECT_THROW((MiscalibrationRange{-1.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((MiscalibrationRange{1.0, 0.0, {0.5, 0.5, 0.5}}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((MiscalibrationRange{1.0, 0.1}.validate()));
}
