#include "lccal/optimize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace lccal {

void ChamferParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta > 0.0)) {
    throw std::invalid_argument("chamfer weights must be nonnegative with a positive sum");
  }
}

namespace {

// Sum of squared nearest distances from each `from` point (after `pose`)
// into `index`.
double sumNearest(const PointCloud& from, const RigidTransform& pose, const SpatialIndex& index) {
  double sum = 0.0;
  for (const auto& p : from.points) sum += index.nearest(pose.apply(p)).squared_distance;
  return sum;
}

void requireNonEmpty(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point cloud");
}

}  // namespace

double chamfer(const PointCloud& p, const PointCloud& q, const ChamferParams& params) {
  params.validate();
  requireNonEmpty(p, q);
  const SpatialIndex qi(q.points);
  const SpatialIndex pi(p.points);
  const RigidTransform id;
  return params.alpha / p.size() * sumNearest(p, id, qi) +
         params.beta / q.size() * sumNearest(q, id, pi);
}

LossBreakdown supervisedLosses(const Eigen::Matrix3d& pred_rot, const Eigen::Vector3d& pred_trans,
                               const RigidTransform& t_cam, const RigidTransform& t_lidar,
                               const PointCloud& cloud) {
  LossBreakdown l;
  const Eigen::Matrix3d rot_residual =
      t_cam.rotation * (pred_rot * t_lidar.rotation).transpose() - Eigen::Matrix3d::Identity();
  l.l_r_gt = rot_residual.cwiseAbs().sum();
  l.l_t_gt = (t_cam.translation - (t_lidar.translation + pred_trans)).norm();
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d predicted = pred_rot * t_lidar.apply(p) + pred_trans;
    l.l_cloud += (predicted - t_cam.apply(p)).norm();
  }
  l.total = l.l_r_gt + l.l_t_gt + l.l_cloud;
  return l;
}

double eulerTranslationDistance(const RigidTransform& pose, const RigidTransform& reference,
                                double euler_scale) {
  const Eigen::Vector3d de =
      eulerFromRotation(reference.rotation).vector() - eulerFromRotation(pose.rotation).vector();
  return euler_scale * de.norm() + (reference.translation - pose.translation).norm();
}

LossBreakdown selfSupervisedLoss(const RigidTransform& candidate, const PointCloud& lidar_cloud,
                                 const PointCloud& cam_cloud,
                                 const std::optional<RigidTransform>& init_guess,
                                 const std::optional<RigidTransform>& reference,
                                 const ChamferParams& params) {
  requireNonEmpty(lidar_cloud, cam_cloud);
  LossBreakdown l;
  l.l_cd = chamfer(transformCloud(lidar_cloud, candidate), cam_cloud, params);
  if (init_guess) l.l_t_ini = (init_guess->translation - candidate.translation).norm();
  if (reference) l.l_eva = eulerTranslationDistance(candidate, *reference);
  l.total = l.l_t_ini + l.l_cd + l.l_eva;
  return l;
}

// Pose refinement -------------------------------------------------------------

void OptimizerConfig::validate() const {
  chamfer().validate();
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (!(damping_init > 0.0)) throw std::invalid_argument("damping_init must be positive");
  if (subsample_cap < 10) throw std::invalid_argument("subsample_cap must be at least 10");
}

std::string toString(RefineStatus status) {
  switch (status) {
    case RefineStatus::kConverged: return "converged";
    case RefineStatus::kMaxIterations: return "max_iterations";
    case RefineStatus::kStalled: return "stalled";
  }
  return "unknown";
}

RigidTransform applyIncrement(const RigidTransform& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  RigidTransform inc;
  inc.rotation = expSO3(delta.head<3>());
  inc.translation = delta.tail<3>();
  return compose(pose, inc);
}

PointCloud subsampleCloud(const PointCloud& cloud, std::size_t cap, std::uint64_t seed) {
  if (cloud.size() <= cap) return cloud;
  std::vector<std::size_t> all(cloud.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> keep;
  keep.reserve(cap);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(keep), cap, rng);
  PointCloud out;
  out.points.reserve(cap);
  for (std::size_t i : keep) {
    out.points.push_back(cloud.points[i]);
    if (cloud.hasIntensity()) out.intensity.push_back(cloud.intensity[i]);
  }
  return out;
}

namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Block36 = Eigen::Matrix<double, 3, 6>;

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// d(pose * Exp(delta) * p) / d(delta) at delta = 0.
Block36 pointJacobian(const RigidTransform& pose, const Eigen::Vector3d& p) {
  Block36 j;
  j.leftCols<3>() = -pose.rotation * skew(p);
  j.rightCols<3>() = pose.rotation;
  return j;
}

// Visits every weighted 3-row residual block of the fixed-correspondence
// objective: visit(residual, jacobian).
template <typename Visit>
void forEachResidual(std::span<const CalibrationFrame> frames, std::span<const Correspondences> pairs,
                     const RigidTransform& pose, const ChamferParams& params,
                     const std::optional<Eigen::Vector3d>& prior, Visit&& visit) {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& lidar = frames[f].lidar.points;
    const auto& cam = frames[f].camera.points;
    const auto& c = pairs[f];
    const double wf = std::sqrt(params.alpha / lidar.size());
    const double wr = std::sqrt(params.beta / cam.size());
    for (std::size_t i = 0; i < lidar.size(); ++i) {
      const Eigen::Vector3d& p = lidar[i];
      visit(Eigen::Vector3d(wf * (pose.apply(p) - cam[c.forward[i]])),
            Block36(wf * pointJacobian(pose, p)));
    }
    for (std::size_t j = 0; j < cam.size(); ++j) {
      const Eigen::Vector3d& p = lidar[c.reverse[j]];
      visit(Eigen::Vector3d(wr * (cam[j] - pose.apply(p))), Block36(-wr * pointJacobian(pose, p)));
    }
  }
  if (prior) {
    Block36 j = Block36::Zero();
    j.rightCols<3>() = pose.rotation;
    visit(Eigen::Vector3d(pose.translation - *prior), j);
  }
}

void checkFrames(std::span<const CalibrationFrame> frames) {
  if (frames.empty()) throw std::invalid_argument("refinePose: no frames");
  for (const auto& f : frames) {
    if (f.lidar.size() < 10 || f.camera.size() < 10) {
      throw std::invalid_argument("refinePose: clouds need at least 10 points");
    }
  }
}

// Per-frame search structures over the (fixed) clouds. Reverse queries map
// camera points back into the LiDAR frame, which preserves distances.
struct FrameIndex {
  SpatialIndex camera;
  SpatialIndex lidar;
};

struct Evaluation {
  LossBreakdown loss;
  std::vector<Correspondences> pairs;
};

Evaluation evaluate(std::span<const CalibrationFrame> frames, std::span<const FrameIndex> indices,
                    const RigidTransform& pose, const ChamferParams& params,
                    const std::optional<Eigen::Vector3d>& prior) {
  Evaluation e;
  e.pairs.resize(frames.size());
  const RigidTransform inv = pose.inverse();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& lidar = frames[f].lidar.points;
    const auto& cam = frames[f].camera.points;
    auto& c = e.pairs[f];
    c.forward.resize(lidar.size());
    c.reverse.resize(cam.size());
    double fwd = 0.0, rev = 0.0;
    for (std::size_t i = 0; i < lidar.size(); ++i) {
      const auto nn = indices[f].camera.nearest(pose.apply(lidar[i]));
      c.forward[i] = nn.index;
      fwd += nn.squared_distance;
    }
    for (std::size_t j = 0; j < cam.size(); ++j) {
      const auto nn = indices[f].lidar.nearest(inv.apply(cam[j]));
      c.reverse[j] = nn.index;
      rev += nn.squared_distance;
    }
    e.loss.l_cd += params.alpha / lidar.size() * fwd + params.beta / cam.size() * rev;
  }
  if (prior) e.loss.l_t_ini = (pose.translation - *prior).norm();
  e.loss.total = e.loss.l_cd + e.loss.l_t_ini;
  return e;
}

constexpr int kMaxRejections = 5;
constexpr double kMaxDamping = 1e12;
constexpr double kMinStep = 1e-12;
constexpr double kMaxCondition = 1e12;

}  // namespace

Correspondences associate(const CalibrationFrame& frame, const RigidTransform& pose) {
  const FrameIndex index{SpatialIndex(frame.camera.points), SpatialIndex(frame.lidar.points)};
  return evaluate(std::span(&frame, 1), std::span(&index, 1), pose, {}, std::nullopt).pairs.front();
}

Linearization linearize(std::span<const CalibrationFrame> frames,
                        std::span<const Correspondences> pairs, const RigidTransform& pose,
                        const ChamferParams& params, const std::optional<Eigen::Vector3d>& prior) {
  if (pairs.size() != frames.size()) throw std::invalid_argument("linearize: one pairing per frame");
  std::size_t blocks = prior ? 1 : 0;
  for (const auto& f : frames) blocks += f.lidar.size() + f.camera.size();
  Linearization lin;
  lin.residuals.resize(static_cast<Eigen::Index>(3 * blocks));
  lin.jacobian.resize(static_cast<Eigen::Index>(3 * blocks), 6);
  Eigen::Index row = 0;
  forEachResidual(frames, pairs, pose, params, prior, [&](const Eigen::Vector3d& r, const Block36& j) {
    lin.residuals.segment<3>(row) = r;
    lin.jacobian.middleRows<3>(row) = j;
    row += 3;
  });
  return lin;
}

OptimizerConfig optimizerConfigFromConfig(const KeyValueConfig& config, const OptimizerConfig& fallback) {
  OptimizerConfig c = fallback;
  c.max_iters = static_cast<int>(config.getInt("max_iters", c.max_iters));
  c.tol = config.getDouble("tol", c.tol);
  c.damping_init = config.getDouble("damping_init", c.damping_init);
  c.alpha = config.getDouble("alpha", c.alpha);
  c.beta = config.getDouble("beta", c.beta);
  const std::int64_t cap = config.getInt("subsample_cap", static_cast<std::int64_t>(c.subsample_cap));
  if (cap <= 0) throw ConfigError("subsample_cap must be positive");
  c.subsample_cap = static_cast<std::size_t>(cap);
  c.seed = static_cast<std::uint64_t>(config.getInt("seed", static_cast<std::int64_t>(c.seed)));
  c.translation_prior = config.getBool("translation_prior", c.translation_prior);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

PoseRefinement refinePoseShared(std::span<const CalibrationFrame> input, const RigidTransform& init,
                                const OptimizerConfig& config) {
  config.validate();
  checkFrames(input);
  if (!init.isValid(1e-6)) throw std::invalid_argument("refinePose: invalid initial pose");

  std::vector<CalibrationFrame> frames;
  std::vector<FrameIndex> indices;
  frames.reserve(input.size());
  indices.reserve(input.size());
  for (std::size_t f = 0; f < input.size(); ++f) {
    const std::uint64_t seed = config.seed + 2 * f;
    frames.push_back({subsampleCloud(input[f].lidar, config.subsample_cap, seed),
                      subsampleCloud(input[f].camera, config.subsample_cap, seed + 1)});
    indices.push_back({SpatialIndex(frames.back().camera.points), SpatialIndex(frames.back().lidar.points)});
  }

  const ChamferParams params = config.chamfer();
  const std::optional<Eigen::Vector3d> prior =
      config.translation_prior ? std::optional<Eigen::Vector3d>(init.translation) : std::nullopt;

  PoseRefinement out;
  out.pose = init;
  Evaluation current = evaluate(frames, indices, init, params, prior);
  out.initial_loss = current.loss;
  out.trace.push_back(current.loss.total);

  double damping = config.damping_init;
  int rejections = 0;
  out.status = RefineStatus::kMaxIterations;
  if (current.loss.total == 0.0) out.status = RefineStatus::kConverged;

  while (out.status == RefineStatus::kMaxIterations && out.iterations < config.max_iters) {
    ++out.iterations;
    Matrix6 h = Matrix6::Zero();
    Vector6 g = Vector6::Zero();
    forEachResidual(frames, current.pairs, out.pose, params, prior,
                    [&](const Eigen::Vector3d& r, const Block36& j) {
                      h.noalias() += j.transpose() * j;
                      g.noalias() += j.transpose() * r;
                    });

    // Marquardt scaling; the floor keeps unobservable directions damped.
    const Vector6 scale = h.diagonal().cwiseMax(1e-9 * std::max(h.trace() / 6.0, 1e-300));
    Matrix6 a;
    while (true) {
      a = h;
      a.diagonal() += damping * scale;
      const Eigen::SelfAdjointEigenSolver<Matrix6> eig(a, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      const double hi = eig.eigenvalues().maxCoeff();
      if (lo > 0.0 && hi / lo <= kMaxCondition) break;
      damping *= 10.0;
      if (damping > kMaxDamping) {
        throw ConvergenceError("refinePose: normal equations remain ill-conditioned");
      }
    }
    const Vector6 delta = -a.ldlt().solve(g);
    if (delta.norm() < kMinStep) {
      out.status = RefineStatus::kConverged;
      break;
    }
    RigidTransform candidate = applyIncrement(out.pose, delta);
    candidate.rotation = orthonormalize(candidate.rotation);
    Evaluation next = evaluate(frames, indices, candidate, params, prior);

    if (next.loss.total < current.loss.total) {
      const double previous = current.loss.total;
      out.pose = candidate;
      current = std::move(next);
      out.trace.push_back(current.loss.total);
      damping = std::max(damping / 10.0, 1e-12);
      rejections = 0;
      if ((previous - current.loss.total) / previous < config.tol || current.loss.total == 0.0) {
        out.status = RefineStatus::kConverged;
      }
    } else {
      damping *= 10.0;
      if (++rejections >= kMaxRejections) out.status = RefineStatus::kStalled;
    }
  }
  out.loss = current.loss;
  return out;
}

PoseRefinement refinePose(const PointCloud& lidar_cloud, const PointCloud& cam_cloud,
                          const RigidTransform& init, const OptimizerConfig& config) {
  const CalibrationFrame frame{lidar_cloud, cam_cloud};
  return refinePoseShared(std::span(&frame, 1), init, config);
}

}  // namespace lccal
