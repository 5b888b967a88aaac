#include "lccal/augment.hpp"
#include "lccal/config.hpp"
#include "lccal/depth_refine.hpp"
#include "lccal/diffmap.hpp"
#include "lccal/fusion.hpp"
#include "lccal/io.hpp"
#include "lccal/optimize.hpp"
#include "lccal/overlay.hpp"
#include "lccal/scene.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace lccal;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options every subcommand accepts.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
};

void addCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "config override, key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "random seed (overrides config and LCCAL_SEED)");
}

// File, then LCCAL_SEED, then command-line overrides.
KeyValueConfig resolveConfig(const Common& c) {
  KeyValueConfig config;
  if (!c.config_path.empty()) config = KeyValueConfig::load(c.config_path);
  if (const char* env = std::getenv("LCCAL_SEED")) {
    KeyValueConfig e;
    e.set("seed", std::string(env));
    e.getInt("seed", 0);  // throws on a non-integer value
    config.merge(e);
  }
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    config.merge(KeyValueConfig::parse(kv + "\n"));
  }
  if (c.seed) config.set("seed", *c.seed);
  return config;
}

std::uint64_t seedOf(const KeyValueConfig& config) {
  return static_cast<std::uint64_t>(config.getInt("seed", 0));
}

std::string frameName(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.txt", i);
  return buf;
}

// Camera input may be a cloud file or a metric depth PGM.
PointCloud loadCameraCloud(const fs::path& path, const CameraIntrinsics& intr) {
  if (path.extension() == ".pgm") return backProject(readDepthPgm(path, intr));
  return loadPointCloud(path);
}

// synth -----------------------------------------------------------------------

int runSynth(const KeyValueConfig& config, const fs::path& out) {
  const SceneSpec spec = SceneSpec::FromConfig(config);
  const CameraIntrinsics intr = intrinsicsFromConfig(config);
  const Scene s = generateScene(spec, defaultLidarPose(), RigidTransform::Identity(), intr);

  fs::create_directories(out);
  AugmentedSample bundle;
  bundle.t_cam = s.truth;
  bundle.t_lidar = s.truth;
  bundle.t_gt = RigidTransform::Identity();
  bundle.ldp = project(s.lidar, s.truth, intr);
  bundle.cdp = s.camera_depth;
  KeyValueConfig meta = config;
  meta.set("seed", static_cast<std::int64_t>(spec.seed));
  meta.set("depth_min", s.depth_min);
  meta.set("depth_max", s.depth_max);
  writeSampleBundle(out, bundle, meta);
  writeNormalizedPgm(out / "cdp_norm.pgm", s.normalized_cdp);
  writePose(out / "truth.txt", s.truth);
  savePointCloud(out / "lidar.bin", s.lidar);
  savePointCloud(out / "camcloud.bin", s.camera);
  std::cout << "lidar_points " << s.lidar.size() << "\ncamera_points " << s.camera.size() << '\n';
  return 0;
}

// augment ---------------------------------------------------------------------

struct AugmentArgs {
  fs::path input;
  fs::path out;
  fs::path base;
  int count = 10;
  bool single_sided = false;
};

int runAugment(const KeyValueConfig& config, const AugmentArgs& a) {
  const CameraIntrinsics intr = intrinsicsFromConfig(config);
  const RigidTransform base = readPose(a.base.empty() ? a.input / "truth.txt" : a.base);
  const PointCloud lidar = loadPointCloud(a.input / "lidar.bin");
  // Both clouds live in the LiDAR frame during augmentation.
  const PointCloud camera = transformCloud(loadPointCloud(a.input / "camcloud.bin"), base.inverse());
  const MiscalibrationRange c_cam = rangeFromConfig("c_cam", config, {5.0, 0.5});
  const MiscalibrationRange c_lidar = rangeFromConfig("c_lidar", config, {5.0, 0.5});
  if (a.count < 1) throw ValidationError("--count must be positive");
  const std::uint64_t seed = seedOf(config);

  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t sample_seed = seed + static_cast<std::uint64_t>(i);
    const AugmentedSample s = a.single_sided ? generateSingleSided(lidar, camera, base, c_lidar, intr, sample_seed)
                                             : generateSample(lidar, camera, base, c_cam, c_lidar, intr, sample_seed);
    KeyValueConfig meta;
    meta.set("seed", static_cast<std::int64_t>(sample_seed));
    meta.set("mode", std::string(a.single_sided ? "single" : "double"));
    if (!a.single_sided) rangeToConfig("c_cam", c_cam, meta);
    rangeToConfig("c_lidar", c_lidar, meta);
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%06d", i);
    writeSampleBundle(a.out / name, s, meta);
  }
  std::cout << "samples " << a.count << '\n';
  return 0;
}

// refine-depth ----------------------------------------------------------------

struct RefineDepthArgs {
  fs::path ldp;
  fs::path cdp;
  fs::path out;
  fs::path anchors_out;
  fs::path diffmap_prefix;
  fs::path truth;
};

int runRefineDepth(const KeyValueConfig& config, const RefineDepthArgs& a) {
  const CameraIntrinsics intr = intrinsicsFromConfig(config);
  const int anchors = static_cast<int>(config.getInt("anchors", kDefaultAnchorCount));
  const DepthImage ldp = readDepthPgm(a.ldp, intr);
  const NormalizedDepthImage cdp = readNormalizedPgm(a.cdp, intr);
  const RefineResult r = refineDepth(ldp, cdp, anchors);
  writeDepthPgm(a.out, r.depth);
  std::cout << "anchors " << r.anchors.size() << '\n';

  if (!a.anchors_out.empty()) {
    std::ofstream f(a.anchors_out);
    if (!f) throw std::runtime_error("cannot write " + a.anchors_out.string());
    f.precision(17);
    for (const Anchor& x : r.anchors) f << x.camera << ' ' << x.lidar << '\n';
  }
  if (!a.diffmap_prefix.empty()) {
    const DifferenceMapOptions opts{config.getDouble("target_error", kDefaultTargetError),
                                    config.getBool("mask_missing_lidar", false)};
    writeDifferenceMap(a.diffmap_prefix, buildDifferenceMap(ldp, r.depth, opts));
  }
  if (!a.truth.empty()) {
    const DepthMetrics m = depthMetrics(r.depth, readDepthPgm(a.truth, intr));
    std::cout << "mae " << m.mae << "\nrmse " << m.rmse << '\n';
  }
  return 0;
}

// calibrate -------------------------------------------------------------------

struct CalibrateArgs {
  std::vector<fs::path> lidar;
  std::vector<fs::path> camera;
  fs::path init;
  fs::path out;
  bool per_frame = false;
  int jobs = 1;
};

void printRefinement(std::ostream& os, const PoseRefinement& r) {
  os << "status " << toString(r.status) << "\niterations " << r.iterations << "\ninitial_loss "
     << r.initial_loss.total << "\nfinal_loss " << r.loss.total << '\n';
}

int runCalibrate(const KeyValueConfig& config, const CalibrateArgs& a) {
  if (a.lidar.size() != a.camera.size()) throw ValidationError("need one --camera per --lidar");
  if (a.lidar.empty()) throw ValidationError("no frames given");
  if (a.jobs < 1) throw ValidationError("--jobs must be positive");
  const CameraIntrinsics intr = intrinsicsFromConfig(config);
  const OptimizerConfig opt = optimizerConfigFromConfig(config);
  const RigidTransform init = a.init.empty() ? RigidTransform::Identity() : readPose(a.init);

  std::vector<CalibrationFrame> frames;
  for (std::size_t i = 0; i < a.lidar.size(); ++i) {
    frames.push_back({loadPointCloud(a.lidar[i]), loadCameraCloud(a.camera[i], intr)});
  }

  if (!a.per_frame) {
    const PoseRefinement r = refinePoseShared(frames, init, opt);
    writePose(a.out, r.pose);
    printRefinement(std::cout, r);
    return 0;
  }

  // Per-frame refinement, frames distributed over worker threads.
  std::vector<PoseRefinement> results(frames.size());
  std::vector<std::exception_ptr> errors(frames.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < frames.size();) {
      try {
        OptimizerConfig c = opt;
        c.seed = opt.seed + 2 * i;
        results[i] = refinePose(frames[i].lidar, frames[i].camera, init, c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(a.jobs), frames.size());
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  pool.clear();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  fs::create_directories(a.out);
  std::ofstream scores(a.out / "scores.txt");
  scores.precision(17);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    writePose(a.out / frameName(i), results[i].pose);
    scores << i << ' ' << scoreSelfSupervised(results[i].pose, frames[i].lidar, frames[i].camera, opt.chamfer())
           << '\n';
    std::cout << "frame " << i << ' ' << toString(results[i].status) << ' ' << results[i].loss.total << '\n';
  }
  if (!scores) throw std::runtime_error("cannot write scores.txt");
  return 0;
}

// fuse ------------------------------------------------------------------------

int runFuse(const KeyValueConfig& config, const fs::path& dir, fs::path out, bool uniform) {
  std::ifstream in(dir / "scores.txt");
  if (!in) throw ValidationError("cannot read " + (dir / "scores.txt").string());
  ScoredPoseSet set;
  set.selection_ratio = config.getDouble("selection_ratio", kDefaultSelectionRatio);
  set.weighting = uniform || config.getString("weighting", "score") == "uniform" ? FusionWeighting::kUniform
                                                                                 : FusionWeighting::kScore;
  std::vector<std::size_t> indices;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::size_t index;
    double score;
    if (!(ls >> index)) continue;
    std::string rest;
    if (!(ls >> score) || (ls >> rest)) {
      throw ValidationError("scores.txt:" + std::to_string(n) + ": expected 'index score'");
    }
    set.entries.push_back({readPose(dir / frameName(index)), score});
    indices.push_back(index);
  }
  const FusionResult r = fuse(set);
  if (out.empty()) out = dir / "fused.txt";
  writePose(out, r.pose);
  std::cout << "selected";
  for (std::size_t i : r.selected) std::cout << ' ' << indices[i];
  std::cout << '\n';
  return 0;
}

// evaluate --------------------------------------------------------------------

struct EvaluateArgs {
  fs::path pose;
  fs::path truth;
  fs::path depth;
  fs::path depth_truth;
};

int runEvaluate(const KeyValueConfig& config, const EvaluateArgs& a) {
  if (a.pose.empty() && a.truth.empty() && a.depth.empty() && a.depth_truth.empty()) {
    throw ValidationError("nothing to evaluate: give --pose/--truth or --depth/--depth-truth");
  }
  if (a.pose.empty() != a.truth.empty()) throw ValidationError("--pose and --truth go together");
  if (a.depth.empty() != a.depth_truth.empty()) throw ValidationError("--depth and --depth-truth go together");
  std::cout.precision(9);
  if (!a.pose.empty()) {
    const PoseError e = poseError(readPose(a.pose), readPose(a.truth));
    std::cout << "rotation_error_deg " << e.rotation_deg << "\ntranslation_error_m " << e.translation_m << '\n';
    if (e.degenerate) std::cout << "warning gimbal_lock\n";
  }
  if (!a.depth.empty()) {
    const CameraIntrinsics intr = intrinsicsFromConfig(config);
    const DepthMetrics m = depthMetrics(readDepthPgm(a.depth, intr), readDepthPgm(a.depth_truth, intr));
    std::cout << "pixels " << m.count << "\nmae " << m.mae << "\nrmse " << m.rmse << "\nabs_rel " << m.abs_rel
              << "\nsq_rel " << m.sq_rel << "\ndelta1 " << m.delta1 << "\ndelta2 " << m.delta2 << "\ndelta3 "
              << m.delta3 << '\n';
  }
  return 0;
}

// overlay ---------------------------------------------------------------------

int runOverlay(const KeyValueConfig& config, const fs::path& ldp_path, const fs::path& background,
               const fs::path& out) {
  const CameraIntrinsics intr = intrinsicsFromConfig(config);
  const DepthImage ldp = readDepthPgm(ldp_path, intr);
  if (background.extension() == ".ppm") {
    writeOverlay(out, ldp, readPpm(background));
  } else {
    writeOverlay(out, ldp, readDepthPgm(background, intr));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-camera extrinsic calibration toolkit"};
  app.require_subcommand(1);
  Common common;

  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene and its sample bundle");
  addCommon(synth, common);
  synth->add_option("-o,--out", synth_out, "output directory")->required();

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "render perturbed LDP/CDP sample bundles");
  addCommon(augment, common);
  augment->add_option("-i,--input", aug.input, "directory with lidar.bin, camcloud.bin and truth.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  augment->add_option("-o,--out", aug.out, "output directory")->required();
  augment->add_option("--base", aug.base, "base extrinsic pose file (default: <input>/truth.txt)");
  augment->add_option("-n,--count", aug.count, "number of samples");
  augment->add_flag("--single-sided", aug.single_sided, "perturb the LiDAR pose only");

  RefineDepthArgs rd;
  auto* refine = app.add_subcommand("refine-depth", "rescale a normalized camera depth map with LiDAR anchors");
  addCommon(refine, common);
  refine->add_option("--ldp", rd.ldp, "LiDAR depth projection (mm PGM)")->required();
  refine->add_option("--cdp", rd.cdp, "normalized camera depth (PGM)")->required();
  refine->add_option("-o,--out", rd.out, "refined metric depth (mm PGM)")->required();
  refine->add_option("--anchors-out", rd.anchors_out, "write selected anchors as text");
  refine->add_option("--diffmap", rd.diffmap_prefix, "write difference map channels with this prefix");
  refine->add_option("--truth", rd.truth, "true depth (mm PGM) to report errors against");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "refine the LiDAR-to-camera extrinsic");
  addCommon(calibrate, common);
  calibrate->add_option("--lidar", cal.lidar, "LiDAR cloud per frame (.bin/.xyz)")->required();
  calibrate->add_option("--camera", cal.camera, "camera cloud or metric depth PGM per frame")->required();
  calibrate->add_option("--init", cal.init, "initial pose file (default identity)");
  calibrate->add_option("-o,--out", cal.out, "pose file, or directory with --per-frame")->required();
  calibrate->add_flag("--per-frame", cal.per_frame, "one pose per frame instead of a shared pose");
  calibrate->add_option("-j,--jobs", cal.jobs, "worker threads for --per-frame");

  fs::path fuse_dir, fuse_out;
  bool fuse_uniform = false;
  auto* fusecmd = app.add_subcommand("fuse", "fuse per-frame poses listed in scores.txt");
  addCommon(fusecmd, common);
  fusecmd->add_option("-d,--dir", fuse_dir, "directory with scores.txt and frame_NNNNNN.txt")->required();
  fusecmd->add_option("-o,--out", fuse_out, "fused pose file (default: <dir>/fused.txt)");
  fusecmd->add_flag("--uniform", fuse_uniform, "equal weights for the selected poses");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "pose and depth errors against ground truth");
  addCommon(evaluate, common);
  evaluate->add_option("--pose", ev.pose, "estimated pose file");
  evaluate->add_option("--truth", ev.truth, "true pose file");
  evaluate->add_option("--depth", ev.depth, "estimated depth (mm PGM)");
  evaluate->add_option("--depth-truth", ev.depth_truth, "true depth (mm PGM)");

  fs::path ov_ldp, ov_bg, ov_out;
  auto* overlay = app.add_subcommand("overlay", "color LiDAR depth over a camera depth or PPM image");
  addCommon(overlay, common);
  overlay->add_option("--ldp", ov_ldp, "LiDAR depth projection (mm PGM)")->required();
  overlay->add_option("--background", ov_bg, "camera depth (mm PGM) or image (PPM)")->required();
  overlay->add_option("-o,--out", ov_out, "output PPM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const KeyValueConfig config = resolveConfig(common);
    if (synth->parsed()) return runSynth(config, synth_out);
    if (augment->parsed()) return runAugment(config, aug);
    if (refine->parsed()) return runRefineDepth(config, rd);
    if (calibrate->parsed()) return runCalibrate(config, cal);
    if (fusecmd->parsed()) return runFuse(config, fuse_dir, fuse_out, fuse_uniform);
    if (evaluate->parsed()) return runEvaluate(config, ev);
    if (overlay->parsed()) return runOverlay(config, ov_ldp, ov_bg, ov_out);
  } catch (const ConvergenceError& e) {
    std::cerr << "lccal: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "lccal: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
