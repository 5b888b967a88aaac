#include "lccal/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lccal {
namespace fs = std::filesystem;

std::vector<std::uint8_t> readFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void writeFileBytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

namespace {

// Netpbm header: magic, then width/height/maxval separated by whitespace with
// optional '#' comments, then exactly one whitespace byte.
struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parsePnmHeader(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skipSpace = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto readInt = [&] {
    skipSpace();
    const std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000'000) break;
      ++pos;
    }
    if (pos == start) throw FormatError(what + ": malformed header at byte " + std::to_string(pos));
    return static_cast<int>(value);
  };
  if (bytes.size() < 2) throw FormatError(what + ": truncated header");
  h.magic = std::string(bytes.begin(), bytes.begin() + 2);
  pos = 2;
  h.width = readInt();
  h.height = readInt();
  h.maxval = readInt();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(what + ": malformed header at byte " + std::to_string(pos));
  }
  h.data_offset = pos + 1;
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
    throw FormatError(what + ": invalid dimensions or maxval");
  }
  return h;
}

std::string pnmHeader(const char* magic, int width, int height, int maxval) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
         std::to_string(maxval) + "\n";
}

std::uint16_t saturate16(double value) {
  return static_cast<std::uint16_t>(std::clamp(std::round(value), 0.0, 65535.0));
}

}  // namespace

void writePgm16(const fs::path& path, const Gray16Image& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw std::invalid_argument("writePgm16: pixel count mismatch");
  }
  const std::string header = pnmHeader("P5", img.width, img.height, 65535);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.pixels.size() * 2);
  for (std::uint16_t v : img.pixels) {
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  writeFileBytes(path, bytes);
}

Gray16Image readPgm(const fs::path& path) {
  const auto bytes = readFileBytes(path);
  const PnmHeader h = parsePnmHeader(bytes, path.string());
  if (h.magic != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t sample = h.maxval > 255 ? 2 : 1;
  if (bytes.size() < h.data_offset + count * sample) {
    throw FormatError(path.string() + ": truncated pixel data at byte " + std::to_string(bytes.size()));
  }
  Gray16Image img{h.width, h.height, std::vector<std::uint16_t>(count)};
  const std::uint8_t* data = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < count; ++i) {
    img.pixels[i] = sample == 2 ? static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1])
                                : data[i];
  }
  return img;
}

void writePpm(const fs::path& path, const RgbImage& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw std::invalid_argument("writePpm: pixel count mismatch");
  }
  const std::string header = pnmHeader("P6", img.width, img.height, 255);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  writeFileBytes(path, bytes);
}

RgbImage readPpm(const fs::path& path) {
  const auto bytes = readFileBytes(path);
  const PnmHeader h = parsePnmHeader(bytes, path.string());
  if (h.magic != "P6" || h.maxval > 255) {
    throw FormatError(path.string() + ": only 8-bit binary PPM (P6) is supported");
  }
  RgbImage img(h.width, h.height);
  if (bytes.size() < h.data_offset + img.pixels.size()) {
    throw FormatError(path.string() + ": truncated pixel data at byte " + std::to_string(bytes.size()));
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), img.pixels.size(),
              img.pixels.begin());
  return img;
}

Gray16Image encodeDepthMm(const DepthImage& img) {
  Gray16Image out{img.width(), img.height(), {}};
  out.pixels.reserve(static_cast<std::size_t>(img.width()) * img.height());
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const double d = img.depth(v, u);
      std::uint16_t mm = saturate16(d * 1000.0);
      if (d > 0.0 && mm == 0) mm = 1;
      out.pixels.push_back(mm);
    }
  }
  return out;
}

DepthImage decodeDepthMm(const Gray16Image& img, const CameraIntrinsics& intr) {
  if (img.width != intr.width || img.height != intr.height) {
    throw FormatError("depth image size does not match intrinsics");
  }
  DepthImage out(intr);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      out.depth(v, u) = img.pixels[static_cast<std::size_t>(v) * img.width + u] / 1000.0;
    }
  }
  return out;
}

void writeDepthPgm(const fs::path& path, const DepthImage& img) {
  writePgm16(path, encodeDepthMm(img));
}

DepthImage readDepthPgm(const fs::path& path, const CameraIntrinsics& intr) {
  return decodeDepthMm(readPgm(path), intr);
}

void writeNormalizedPgm(const fs::path& path, const NormalizedDepthImage& img) {
  Gray16Image out{img.width(), img.height(), {}};
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      std::uint16_t s = 0;
      if (img.valid(v, u)) s = std::max<std::uint16_t>(1, saturate16(img.values(v, u) * 65535.0));
      out.pixels.push_back(s);
    }
  }
  writePgm16(path, out);
}

NormalizedDepthImage readNormalizedPgm(const fs::path& path, const CameraIntrinsics& intr) {
  const Gray16Image raw = readPgm(path);
  if (raw.width != intr.width || raw.height != intr.height) {
    throw FormatError(path.string() + ": size does not match intrinsics");
  }
  NormalizedDepthImage img(intr);
  for (int v = 0; v < raw.height; ++v) {
    for (int u = 0; u < raw.width; ++u) {
      const std::uint16_t s = raw.pixels[static_cast<std::size_t>(v) * raw.width + u];
      img.valid(v, u) = s != 0;
      img.values(v, u) = s / 65535.0;
    }
  }
  return img;
}

void writeDifferenceMap(const fs::path& prefix, const DifferenceMap& map) {
  auto encode = [](const DepthGrid& grid, double scale, double offset) {
    Gray16Image out{static_cast<int>(grid.cols()), static_cast<int>(grid.rows()), {}};
    for (int v = 0; v < grid.rows(); ++v) {
      for (int u = 0; u < grid.cols(); ++u) out.pixels.push_back(saturate16(grid(v, u) * scale + offset));
    }
    return out;
  };
  const std::string base = prefix.string();
  writePgm16(base + "_lidar.pgm", encode(map.lidar, 1000.0, 0.0));
  writePgm16(base + "_above.pgm", encode(map.above, 1000.0, 32768.0));
  writePgm16(base + "_within.pgm", encode(map.within, 1000.0, 32768.0));
}

// Point clouds ----------------------------------------------------------------

namespace {

float readFloatLE(const std::uint8_t* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void appendFloatLE(std::vector<std::uint8_t>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

}  // namespace

PointCloud decodeKittiBin(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 16 != 0) {
    throw FormatError("point cloud .bin size is not a multiple of 16; trailing record at byte " +
                      std::to_string(bytes.size() - bytes.size() % 16));
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.reserve(n);
  cloud.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + 16 * i;
    const Eigen::Vector3d p(readFloatLE(rec), readFloatLE(rec + 4), readFloatLE(rec + 8));
    if (!p.allFinite()) {
      throw FormatError("non-finite coordinate in record at byte " + std::to_string(16 * i));
    }
    cloud.points.push_back(p);
    cloud.intensity.push_back(readFloatLE(rec + 12));
  }
  return cloud;
}

std::vector<std::uint8_t> encodeKittiBin(const PointCloud& cloud) {
  cloud.validate();
  std::vector<std::uint8_t> bytes;
  bytes.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    appendFloatLE(bytes, static_cast<float>(p.x()));
    appendFloatLE(bytes, static_cast<float>(p.y()));
    appendFloatLE(bytes, static_cast<float>(p.z()));
    appendFloatLE(bytes, cloud.hasIntensity() ? cloud.intensity[i] : 0.0f);
  }
  return bytes;
}

namespace {

PointCloud parseXyz(const std::vector<std::uint8_t>& bytes) {
  PointCloud cloud;
  bool with_intensity = false;
  std::size_t line_start = 0;
  while (line_start < bytes.size()) {
    std::size_t line_end = line_start;
    while (line_end < bytes.size() && bytes[line_end] != '\n') ++line_end;
    std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(line_start),
                     bytes.begin() + static_cast<std::ptrdiff_t>(line_end));
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream in(line);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size() || !std::isfinite(v)) {
        throw FormatError("malformed .xyz value at byte " + std::to_string(line_start));
      }
      values.push_back(v);
    }
    if (!values.empty()) {
      if (values.size() != 3 && values.size() != 4) {
        throw FormatError("expected 3 or 4 values per .xyz line at byte " + std::to_string(line_start));
      }
      const bool has_i = values.size() == 4;
      if (cloud.points.empty()) with_intensity = has_i;
      if (has_i != with_intensity) {
        throw FormatError("inconsistent column count in .xyz at byte " + std::to_string(line_start));
      }
      cloud.points.emplace_back(values[0], values[1], values[2]);
      if (has_i) cloud.intensity.push_back(static_cast<float>(values[3]));
    }
    line_start = line_end + 1;
  }
  return cloud;
}

}  // namespace

PointCloud loadPointCloud(const fs::path& path) {
  const auto ext = path.extension().string();
  const auto bytes = readFileBytes(path);
  try {
    if (ext == ".bin") return decodeKittiBin(bytes);
    if (ext == ".xyz") return parseXyz(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  throw FormatError(path.string() + ": unsupported point cloud extension '" + ext + "'");
}

void savePointCloud(const fs::path& path, const PointCloud& cloud) {
  const auto ext = path.extension().string();
  if (ext == ".bin") {
    writeFileBytes(path, encodeKittiBin(cloud));
    return;
  }
  if (ext != ".xyz") throw FormatError(path.string() + ": unsupported point cloud extension");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.hasIntensity()) out << ' ' << cloud.intensity[i];
    out << '\n';
  }
}

// Poses -------------------------------------------------------------------------

std::string formatPose(const RigidTransform& pose) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << pose.rotation(r, c) << ' ';
    out << pose.translation[r] << (r < 2 ? " " : "");
  }
  return out.str();
}

RigidTransform parsePose(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> v;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(x)) {
      throw FormatError("malformed pose value '" + token + "'");
    }
    v.push_back(x);
  }
  if (v.size() != 12) throw FormatError("pose line must contain 12 values");
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = v[4 * r + c];
    t.translation[r] = v[4 * r + 3];
  }
  if (!t.isValid(1e-9)) {
    // Calibration files often carry rotations rounded to a few digits.
    if (!t.isValid(1e-3)) throw FormatError("pose rotation is not a rotation matrix");
    t.rotation = orthonormalize(t.rotation);
  }
  return t;
}

std::vector<RigidTransform> readPoses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<RigidTransform> poses;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      poses.push_back(parsePose(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return poses;
}

RigidTransform readPose(const fs::path& path) {
  const auto poses = readPoses(path);
  if (poses.empty()) throw FormatError(path.string() + ": no pose found");
  return poses.front();
}

void writePoses(const fs::path& path, const std::vector<RigidTransform>& poses) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& p : poses) out << formatPose(p) << '\n';
}

void writePose(const fs::path& path, const RigidTransform& pose) { writePoses(path, {pose}); }

}  // namespace lccal
