#pragma once

#include "lccal/config.hpp"
#include "lccal/geometry.hpp"
#include "lccal/projection.hpp"
#include "lccal/spatial_index.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lccal {

/// Balances rotation (degrees) against translation (meters): 1 degree is
/// weighted like 0.1 m.
inline constexpr double kEulerScale = 0.1;

struct ChamferParams {
  double alpha = 0.5;
  double beta = 0.5;
  void validate() const;
};

/// alpha/|P| sum_p min_q |p - q|^2 + beta/|Q| sum_q min_p |q - p|^2.
/// Throws std::invalid_argument when either cloud is empty.
double chamfer(const PointCloud& p, const PointCloud& q, const ChamferParams& params = {});

struct LossBreakdown {
  double l_cd = 0.0;
  double l_t_ini = 0.0;
  double l_eva = 0.0;
  double l_r_gt = 0.0;
  double l_t_gt = 0.0;
  double l_cloud = 0.0;
  double total = 0.0;
};

/// Ground-truth supervised terms for a predicted (R, t) applied on top of the
/// LiDAR-side pose: entrywise L1 rotation residual of R_cam (R R_lidar)^-1 - I,
/// translation residual |t_cam - (t_lidar + t)|, and the summed per-point
/// distance between the two mappings of `cloud`. total = sum of the three.
LossBreakdown supervisedLosses(const Eigen::Matrix3d& pred_rot, const Eigen::Vector3d& pred_trans,
                               const RigidTransform& t_cam, const RigidTransform& t_lidar,
                               const PointCloud& cloud);

/// a |e_ref - e|_2 + |t_ref - t|_2 with e the Euler angles in degrees.
double eulerTranslationDistance(const RigidTransform& pose, const RigidTransform& reference,
                                double euler_scale = kEulerScale);

/// Self-supervised objective: Chamfer distance of the transformed LiDAR cloud
/// against the camera cloud, plus the optional initial-guess translation term
/// and the optional distance to an external reference pose.
LossBreakdown selfSupervisedLoss(const RigidTransform& candidate, const PointCloud& lidar_cloud,
                                 const PointCloud& cam_cloud,
                                 const std::optional<RigidTransform>& init_guess = std::nullopt,
                                 const std::optional<RigidTransform>& reference = std::nullopt,
                                 const ChamferParams& params = {});

// Pose refinement -------------------------------------------------------------

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  int max_iters = 100;
  double tol = 1e-8;
  double damping_init = 1e-4;
  double alpha = 0.5;
  double beta = 0.5;
  std::size_t subsample_cap = 20000;
  std::uint64_t seed = 0;
  /// Adds |t_init - t| (the initial guess is `init`) to the objective.
  bool translation_prior = false;

  ChamferParams chamfer() const { return {alpha, beta}; }
  void validate() const;
};

/// Keys: max_iters, tol, damping_init, alpha, beta, subsample_cap, seed,
/// translation_prior. Missing keys keep the fallback's values.
OptimizerConfig optimizerConfigFromConfig(const KeyValueConfig& config, const OptimizerConfig& fallback = {});

enum class RefineStatus { kConverged, kMaxIterations, kStalled };
std::string toString(RefineStatus status);

/// LiDAR cloud (LiDAR frame) and camera depth cloud (camera frame) of one frame.
struct CalibrationFrame {
  PointCloud lidar;
  PointCloud camera;
};

struct PoseRefinement {
  RigidTransform pose;
  LossBreakdown loss;
  LossBreakdown initial_loss;
  /// Accepted total losses, starting with the initial one.
  std::vector<double> trace;
  int iterations = 0;
  RefineStatus status = RefineStatus::kMaxIterations;
};

/// Minimizes the self-supervised objective over the LiDAR-to-camera pose by
/// alternating nearest-neighbor association with damped Gauss-Newton steps
/// on a right-composed 6-vector increment (axis-angle, translation).
/// Clouds need at least 10 points. Throws ConvergenceError when the normal
/// equations stay ill-conditioned after damping is exhausted.
PoseRefinement refinePose(const PointCloud& lidar_cloud, const PointCloud& cam_cloud,
                          const RigidTransform& init, const OptimizerConfig& config = {});

/// One pose shared by all frames; the objective is the sum of per-frame losses.
PoseRefinement refinePoseShared(std::span<const CalibrationFrame> frames,
                                const RigidTransform& init, const OptimizerConfig& config = {});

/// pose * (Exp(delta[0..2]), delta[3..5]).
RigidTransform applyIncrement(const RigidTransform& pose, const Eigen::Matrix<double, 6, 1>& delta);

/// Fixed nearest-neighbor pairings for one frame: forward[i] is the camera
/// point matched to LiDAR point i, reverse[j] the LiDAR point matched to
/// camera point j.
struct Correspondences {
  std::vector<std::size_t> forward;
  std::vector<std::size_t> reverse;
};

/// Weighted residual stack of the fixed-correspondence objective (its squared
/// norm equals the Chamfer term, plus prior rows when `prior` is set) and its
/// analytic Jacobian with respect to applyIncrement's delta at zero.
struct Linearization {
  Eigen::VectorXd residuals;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;
};

Linearization linearize(std::span<const CalibrationFrame> frames,
                        std::span<const Correspondences> pairs, const RigidTransform& pose,
                        const ChamferParams& params,
                        const std::optional<Eigen::Vector3d>& prior = std::nullopt);

/// Nearest-neighbor pairings of `frame` under `pose`.
Correspondences associate(const CalibrationFrame& frame, const RigidTransform& pose);

/// Seeded uniform subsample without replacement; order is preserved.
PointCloud subsampleCloud(const PointCloud& cloud, std::size_t cap, std::uint64_t seed);

}  // namespace lccal
