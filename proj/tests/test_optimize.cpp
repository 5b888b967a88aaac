#include "lccal/optimize.hpp"
#include "lccal/spatial_index.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace lccal;

namespace {

PointCloud cloudOf(std::vector<Eigen::Vector3d> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

// Dense grid on the plane z = depth.
PointCloud plane(double depth, double half, int n) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      c.points.emplace_back(-half + 2 * half * i / (n - 1), -half + 2 * half * j / (n - 1), depth);
  return c;
}

// Three mutually orthogonal patches: well constrained in all 6 DoF.
PointCloud corner(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng), 0.0);
    c.points.emplace_back(u(rng), 0.0, u(rng));
    c.points.emplace_back(0.0, u(rng), u(rng));
  }
  return c;
}

}  // namespace

TEST(SpatialIndex, MatchesLinearScan) {
  std::mt19937_64 rng(1);
  const auto pts = oracle::randomCloud(rng, 3000, 10.0);
  const SpatialIndex index(pts);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d q = oracle::randomVector(rng, 12.0);
    const auto nn = index.nearest(q);
    const std::size_t expected = oracle::linearScanNearest(pts, q);
    EXPECT_EQ(nn.squared_distance, (pts[expected] - q).squaredNorm());
  }
}

TEST(SpatialIndex, DuplicatesAndEmpty) {
  const std::vector<Eigen::Vector3d> pts(20, Eigen::Vector3d(1, 1, 1));
  const SpatialIndex index(pts);
  EXPECT_EQ(index.nearest({0, 0, 0}).index, 0u);
  EXPECT_THROW(SpatialIndex().nearest({0, 0, 0}), std::logic_error);
}

TEST(Chamfer, IdenticalCloudsAreZero) {
  std::mt19937_64 rng(2);
  const PointCloud p = cloudOf(oracle::randomCloud(rng, 100, 1.0));
  EXPECT_EQ(chamfer(p, p), 0.0);
}

TEST(Chamfer, Singletons) {
  EXPECT_DOUBLE_EQ(chamfer(cloudOf({{0, 0, 0}}), cloudOf({{0, 0, 2}})), 4.0);
}

TEST(Chamfer, MatchesLinearScanOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = oracle::randomCloud(rng, 200, 1.0);
    const auto q = oracle::randomCloud(rng, 150, 1.0);
    const double expected = oracle::chamferOracle(p, q, 0.3, 0.7);
    EXPECT_NEAR(chamfer(cloudOf(p), cloudOf(q), {0.3, 0.7}), expected, 1e-12 * expected);
  }
}

TEST(Chamfer, RigidInvariance) {
  std::mt19937_64 rng(4);
  const PointCloud p = cloudOf(oracle::randomCloud(rng, 200, 1.0));
  const PointCloud q = cloudOf(oracle::randomCloud(rng, 200, 1.0));
  RigidTransform t;
  t.rotation = oracle::randomRotation(rng);
  t.translation = oracle::randomVector(rng, 10.0);
  const double a = chamfer(p, q);
  const double b = chamfer(transformCloud(p, t), transformCloud(q, t));
  EXPECT_NEAR(a, b, 1e-9 * a);
}

TEST(Chamfer, Errors) {
  EXPECT_THROW(chamfer(PointCloud{}, cloudOf({{0, 0, 0}})), std::invalid_argument);
  EXPECT_THROW(chamfer(cloudOf({{0, 0, 0}}), cloudOf({{0, 0, 0}}), {0.0, 0.0}), std::invalid_argument);
}

TEST(SupervisedLosses, ExactPredictionIsZero) {
  std::mt19937_64 rng(5);
  RigidTransform cam, lidar;
  cam.rotation = oracle::randomRotation(rng);
  cam.translation = oracle::randomVector(rng, 1.0);
  lidar.rotation = oracle::randomRotation(rng);
  lidar.translation = oracle::randomVector(rng, 1.0);
  // Predicted (R, t) maps T_lidar onto T_cam: R = R_cam R_lidar^T, t = t_cam - R t_lidar.
  const Eigen::Matrix3d r = cam.rotation * lidar.rotation.transpose();
  const Eigen::Vector3d t = cam.translation - r * lidar.translation;
  const PointCloud cloud = cloudOf(oracle::randomCloud(rng, 50, 5.0));
  const LossBreakdown l = supervisedLosses(r, t, cam, lidar, cloud);
  EXPECT_NEAR(l.l_r_gt, 0.0, 1e-12);
  EXPECT_NEAR(l.l_cloud, 0.0, 1e-10);
}

TEST(SupervisedLosses, TranslationOffset) {
  const PointCloud cloud = cloudOf({{1, 2, 3}, {4, 5, 6}, {0, 0, 1}});
  const LossBreakdown l = supervisedLosses(Eigen::Matrix3d::Identity(), {0.1, 0, 0}, {}, {}, cloud);
  EXPECT_DOUBLE_EQ(l.l_t_gt, 0.1);
  EXPECT_NEAR(l.l_cloud, 0.3, 1e-15);
  EXPECT_EQ(l.l_r_gt, 0.0);
  EXPECT_NEAR(l.total, 0.4, 1e-15);
}

TEST(SupervisedLosses, MatchesFormula) {
  std::mt19937_64 rng(6);
  RigidTransform cam, lidar;
  cam.rotation = oracle::randomRotation(rng);
  lidar.rotation = oracle::randomRotation(rng);
  cam.translation = oracle::randomVector(rng, 1.0);
  lidar.translation = oracle::randomVector(rng, 1.0);
  const Eigen::Matrix3d r = oracle::randomRotation(rng);
  const Eigen::Vector3d t = oracle::randomVector(rng, 1.0);
  const PointCloud cloud = cloudOf(oracle::randomCloud(rng, 30, 3.0));
  double rot = 0.0;
  const Eigen::Matrix3d m = cam.rotation * (r * lidar.rotation).inverse();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot += std::abs(m(i, j) - (i == j ? 1.0 : 0.0));
  double pts = 0.0;
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d a = r * (lidar.rotation * p + lidar.translation) + t;
    const Eigen::Vector3d b = cam.rotation * p + cam.translation;
    pts += (a - b).norm();
  }
  const LossBreakdown l = supervisedLosses(r, t, cam, lidar, cloud);
  EXPECT_NEAR(l.l_r_gt, rot, 1e-12);
  EXPECT_NEAR(l.l_t_gt, (cam.translation - (lidar.translation + t)).norm(), 1e-12);
  EXPECT_NEAR(l.l_cloud, pts, 1e-10);
}

TEST(SelfSupervisedLoss, Terms) {
  std::mt19937_64 rng(7);
  const PointCloud cam = cloudOf(oracle::randomCloud(rng, 100, 2.0));
  RigidTransform truth;
  truth.rotation = rotationFromEuler({10, 5, -3});
  truth.translation = {0.3, -0.1, 0.2};
  const PointCloud lidar = transformCloud(cam, truth.inverse());
  const LossBreakdown exact = selfSupervisedLoss(truth, lidar, cam);
  EXPECT_NEAR(exact.total, 0.0, 1e-20);
  EXPECT_EQ(selfSupervisedLoss(truth, lidar, cam, std::nullopt, truth).l_eva, 0.0);

  RigidTransform ref = truth;
  ref.rotation = rotationFromEuler({11, 5, -3});
  ref.translation.x() += 0.1;
  EXPECT_NEAR(selfSupervisedLoss(truth, lidar, cam, std::nullopt, ref).l_eva, 0.2, 1e-9);

  RigidTransform guess = truth;
  guess.translation.z() += 0.5;
  const LossBreakdown g = selfSupervisedLoss(truth, lidar, cam, guess);
  EXPECT_NEAR(g.l_t_ini, 0.5, 1e-15);
  EXPECT_NEAR(g.total, g.l_t_ini + g.l_cd, 1e-15);
  EXPECT_THROW(selfSupervisedLoss(truth, PointCloud{}, cam), std::invalid_argument);
}

TEST(Linearize, ResidualNormIsChamfer) {
  std::mt19937_64 rng(8);
  const CalibrationFrame frame{cloudOf(oracle::randomCloud(rng, 80, 1.0)),
                               cloudOf(oracle::randomCloud(rng, 60, 1.0))};
  RigidTransform pose;
  pose.rotation = oracle::randomRotation(rng);
  pose.translation = oracle::randomVector(rng, 0.2);
  const Correspondences c = associate(frame, pose);
  const Linearization lin = linearize(std::span(&frame, 1), std::span(&c, 1), pose, {0.5, 0.5});
  const double expected = chamfer(transformCloud(frame.lidar, pose), frame.camera);
  EXPECT_NEAR(lin.residuals.squaredNorm(), expected, 1e-12 * expected);
}

TEST(Linearize, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const CalibrationFrame frame{cloudOf(oracle::randomCloud(rng, 30, 1.0)),
                                 cloudOf(oracle::randomCloud(rng, 25, 1.0))};
    RigidTransform pose;
    pose.rotation = oracle::randomRotation(rng);
    pose.translation = oracle::randomVector(rng, 1.0);
    const Correspondences c = associate(frame, pose);
    const Eigen::Vector3d prior = oracle::randomVector(rng, 1.0);
    const Linearization lin = linearize(std::span(&frame, 1), std::span(&c, 1), pose, {0.4, 0.6}, prior);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d[k] = h;
      const auto plus = linearize(std::span(&frame, 1), std::span(&c, 1), applyIncrement(pose, d), {0.4, 0.6}, prior);
      const auto minus = linearize(std::span(&frame, 1), std::span(&c, 1), applyIncrement(pose, -d), {0.4, 0.6}, prior);
      const Eigen::VectorXd fd = (plus.residuals - minus.residuals) / (2 * h);
      const Eigen::VectorXd an = lin.jacobian.col(k);
      EXPECT_LE((fd - an).norm(), 1e-5 * std::max(1.0, an.norm())) << "column " << k;
    }
  }
}

TEST(SubsampleCloud, CapAndDeterminism) {
  std::mt19937_64 rng(10);
  const PointCloud c = cloudOf(oracle::randomCloud(rng, 1000, 1.0));
  const PointCloud a = subsampleCloud(c, 100, 5);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(subsampleCloud(c, 100, 5).points, a.points);
  EXPECT_NE(subsampleCloud(c, 100, 6).points, a.points);
  EXPECT_EQ(subsampleCloud(c, 5000, 5).points, c.points);
}

TEST(RefinePose, GroundTruthInitStaysPut) {
  std::mt19937_64 rng(11);
  const PointCloud cam = corner(rng, 300);
  RigidTransform truth;
  truth.rotation = rotationFromEuler({4, -2, 1});
  truth.translation = {0.1, 0.05, -0.2};
  const PointCloud lidar = transformCloud(cam, truth.inverse());
  const PoseRefinement r = refinePose(lidar, cam, truth);
  EXPECT_LE(r.iterations, 1);
  EXPECT_LT((r.pose.matrix() - truth.matrix()).norm(), 1e-9);
  EXPECT_EQ(r.status, RefineStatus::kConverged);
}

TEST(RefinePose, RecoversCornerPose) {
  std::mt19937_64 rng(12);
  const PointCloud cam = corner(rng, 600);
  RigidTransform truth;
  truth.rotation = rotationFromEuler({2, 1, -1});
  truth.translation = {0.05, -0.05, 0.1};
  const PointCloud lidar = transformCloud(corner(rng, 600), truth.inverse());
  RigidTransform init = truth;
  init.rotation = rotationFromEuler({5, -1, 2}) * truth.rotation;
  init.translation += Eigen::Vector3d(0.1, 0.1, -0.1);
  const PoseRefinement r = refinePose(lidar, cam, init);
  const PoseError e = poseError(r.pose, truth);
  EXPECT_LT(e.rotation_deg, 0.5);
  EXPECT_LT(e.translation_m, 0.02);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_LE(r.loss.total, r.initial_loss.total);
}

TEST(RefinePose, PlaneOffsetAlongNormal) {
  const PointCloud cam = plane(5.0, 2.0, 60);
  RigidTransform truth;
  truth.translation = {0, 0, 0.3};
  const PointCloud lidar = transformCloud(cam, truth.inverse());
  // Only the normal direction is observable; the damping floor keeps the
  // unobservable directions near their initial values.
  OptimizerConfig cfg;
  const PoseRefinement r = refinePose(lidar, cam, RigidTransform::Identity(), cfg);
  EXPECT_NEAR(r.pose.translation.z(), 0.3, 1e-3);
}

TEST(RefinePose, SharedPoseOverFrames) {
  std::mt19937_64 rng(13);
  RigidTransform truth;
  truth.rotation = rotationFromEuler({-3, 2, 1});
  truth.translation = {0.1, 0.0, 0.05};
  std::vector<CalibrationFrame> frames;
  for (int f = 0; f < 3; ++f) {
    const PointCloud cam = corner(rng, 200);
    frames.push_back({transformCloud(cam, truth.inverse()), cam});
  }
  const PoseRefinement r = refinePoseShared(frames, RigidTransform::Identity());
  const PoseError e = poseError(r.pose, truth);
  EXPECT_LT(e.rotation_deg, 1e-3);
  EXPECT_LT(e.translation_m, 1e-4);
}

TEST(RefinePose, TranslationPriorPullsTowardInit) {
  std::mt19937_64 rng(14);
  const PointCloud cam = corner(rng, 300);
  RigidTransform truth;
  truth.translation = {0.2, 0, 0};
  const PointCloud lidar = transformCloud(cam, truth.inverse());
  OptimizerConfig with;
  with.translation_prior = true;
  const PoseRefinement a = refinePose(lidar, cam, RigidTransform::Identity(), with);
  const PoseRefinement b = refinePose(lidar, cam, RigidTransform::Identity());
  EXPECT_LT(a.pose.translation.x(), b.pose.translation.x());
  EXPECT_LE(a.loss.total, a.initial_loss.total);
  EXPECT_LE(a.loss.l_t_ini, 0.2);
}

TEST(RefinePose, Errors) {
  std::mt19937_64 rng(15);
  const PointCloud few = cloudOf(oracle::randomCloud(rng, 5, 1.0));
  const PointCloud many = cloudOf(oracle::randomCloud(rng, 50, 1.0));
  EXPECT_THROW(refinePose(few, many, {}), std::invalid_argument);
  OptimizerConfig bad;
  bad.damping_init = 0.0;
  EXPECT_THROW(refinePose(many, many, {}, bad), std::invalid_argument);
  RigidTransform invalid;
  invalid.rotation *= 2.0;
  EXPECT_THROW(refinePose(many, many, invalid), std::invalid_argument);
}

TEST(RefinePose, DeterministicPerSeed) {
  std::mt19937_64 rng(16);
  const PointCloud cam = corner(rng, 2000);
  RigidTransform truth;
  truth.translation = {0.05, 0, 0};
  const PointCloud lidar = transformCloud(cam, truth.inverse());
  OptimizerConfig cfg;
  cfg.subsample_cap = 500;
  cfg.seed = 9;
  const auto a = refinePose(lidar, cam, {}, cfg);
  const auto b = refinePose(lidar, cam, {}, cfg);
  EXPECT_EQ(a.pose.matrix(), b.pose.matrix());
  EXPECT_EQ(a.trace, b.trace);
}

TEST(OptimizerConfig, FromConfig) {
  const auto c = optimizerConfigFromConfig(KeyValueConfig::parse(
      "max_iters = 7\nalpha = 0.3\nbeta = 0.7\nsubsample_cap = 500\nseed = 9\ntranslation_prior = true\n"));
  EXPECT_EQ(c.max_iters, 7);
  EXPECT_EQ(c.alpha, 0.3);
  EXPECT_EQ(c.subsample_cap, 500u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_TRUE(c.translation_prior);
  EXPECT_EQ(optimizerConfigFromConfig(KeyValueConfig{}).damping_init, 1e-4);
  EXPECT_THROW(optimizerConfigFromConfig(KeyValueConfig::parse("damping_init = 0\n")), ConfigError);
  EXPECT_THROW(optimizerConfigFromConfig(KeyValueConfig::parse("subsample_cap = -1\n")), ConfigError);
}
