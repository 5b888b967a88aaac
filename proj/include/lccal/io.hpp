#pragma once

#include "lccal/depth_refine.hpp"
#include "lccal/diffmap.hpp"
#include "lccal/geometry.hpp"
#include "lccal/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace lccal {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raster files ----------------------------------------------------------------

struct Gray16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  // row-major
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved RGB

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
};

/// Binary P5 with maxval 65535, samples big-endian.
void writePgm16(const std::filesystem::path& path, const Gray16Image& img);
/// Reads binary P5 (8- or 16-bit samples; header comments allowed).
Gray16Image readPgm(const std::filesystem::path& path);

void writePpm(const std::filesystem::path& path, const RgbImage& img);
RgbImage readPpm(const std::filesystem::path& path);

/// Millimeter depth: sample = round(depth * 1000) saturated to 65535; a
/// positive depth never rounds to the 0 "no data" code.
Gray16Image encodeDepthMm(const DepthImage& img);
DepthImage decodeDepthMm(const Gray16Image& img, const CameraIntrinsics& intr);
void writeDepthPgm(const std::filesystem::path& path, const DepthImage& img);
DepthImage readDepthPgm(const std::filesystem::path& path, const CameraIntrinsics& intr);

/// Normalized depth: 65535 maps to 1.0; sample 0 marks an invalid pixel, so
/// valid values are stored as at least 1.
void writeNormalizedPgm(const std::filesystem::path& path, const NormalizedDepthImage& img);
NormalizedDepthImage readNormalizedPgm(const std::filesystem::path& path,
                                       const CameraIntrinsics& intr);

/// Writes `<prefix>_lidar.pgm` (mm), `<prefix>_above.pgm` and
/// `<prefix>_within.pgm` (stored = delta * 1000 + 32768).
void writeDifferenceMap(const std::filesystem::path& prefix, const DifferenceMap& map);

// Point clouds ----------------------------------------------------------------

/// `.bin`: consecutive little-endian float32 (x, y, z, intensity) records.
/// `.xyz`: one "x y z" (optionally "x y z intensity") line per point.
PointCloud loadPointCloud(const std::filesystem::path& path);
void savePointCloud(const std::filesystem::path& path, const PointCloud& cloud);

PointCloud decodeKittiBin(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encodeKittiBin(const PointCloud& cloud);

// Poses -------------------------------------------------------------------------

/// One transform per line: 12 reals, row-major 3x4 [R | t].
std::vector<RigidTransform> readPoses(const std::filesystem::path& path);
RigidTransform readPose(const std::filesystem::path& path);  // first line
void writePoses(const std::filesystem::path& path, const std::vector<RigidTransform>& poses);
void writePose(const std::filesystem::path& path, const RigidTransform& pose);
std::string formatPose(const RigidTransform& pose);
RigidTransform parsePose(const std::string& line);

/// Reads a whole file into bytes; throws FormatError when unreadable.
std::vector<std::uint8_t> readFileBytes(const std::filesystem::path& path);
void writeFileBytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace lccal
