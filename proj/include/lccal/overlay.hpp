#pragma once

#include "lccal/io.hpp"
#include "lccal/projection.hpp"

#include <array>
#include <cstdint>
#include <filesystem>

namespace lccal {

/// Jet colormap for t in [0, 1] (values outside are clamped).
std::array<std::uint8_t, 3> jetColor(double t);

/// Gray rendering of `background` (near = bright) with every LDP pixel drawn
/// in a jet color scaled over the LDP's own depth range. Throws
/// std::invalid_argument on resolution mismatch.
RgbImage renderOverlay(const DepthImage& ldp, const DepthImage& background);
RgbImage renderOverlay(const DepthImage& ldp, const RgbImage& background);

void writeOverlay(const std::filesystem::path& path, const DepthImage& ldp,
                  const DepthImage& background);
void writeOverlay(const std::filesystem::path& path, const DepthImage& ldp,
                  const RgbImage& background);

}  // namespace lccal
