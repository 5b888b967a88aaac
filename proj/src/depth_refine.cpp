#include "lccal/depth_refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lccal {

void NormalizedDepthImage::validate() const {
  intrinsics.validate();
  if (values.rows() != intrinsics.height || values.cols() != intrinsics.width ||
      valid.rows() != values.rows() || valid.cols() != values.cols()) {
    throw std::invalid_argument("normalized depth grid does not match intrinsics");
  }
  for (int v = 0; v < height(); ++v) {
    for (int u = 0; u < width(); ++u) {
      if (!valid(v, u)) continue;
      const double x = values(v, u);
      if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("normalized depth must lie in [0, 1]");
      }
    }
  }
}

AnchorSet extractAnchors(const DepthImage& ldp, const NormalizedDepthImage& cdp) {
  if (ldp.width() != cdp.width() || ldp.height() != cdp.height()) {
    throw std::invalid_argument("extractAnchors: resolution mismatch");
  }
  AnchorSet pairs;
  for (int v = 0; v < ldp.height(); ++v) {
    for (int u = 0; u < ldp.width(); ++u) {
      const double d = ldp.depth(v, u);
      if (d > 0.0 && cdp.valid(v, u)) pairs.push_back({cdp.values(v, u), d});
    }
  }
  if (pairs.empty()) throw NoAnchorsError();

  std::sort(pairs.begin(), pairs.end(), [](const Anchor& a, const Anchor& b) {
    return a.camera < b.camera || (a.camera == b.camera && a.lidar < b.lidar);
  });

  AnchorSet unique;
  for (std::size_t begin = 0; begin < pairs.size();) {
    std::size_t end = begin + 1;
    while (end < pairs.size() && pairs[end].camera == pairs[begin].camera) ++end;
    // Group is sorted by lidar depth; take the lower median.
    unique.push_back(pairs[begin + (end - begin - 1) / 2]);
    begin = end;
  }
  return unique;
}

AnchorSet thinCandidates(std::span<const Anchor> sorted, int target_count) {
  if (sorted.empty()) return {};
  if (target_count < 2) throw std::invalid_argument("target anchor count must be at least 2");
  const int bins = 2 * target_count;
  const double lo = sorted.front().camera;
  const double hi = sorted.back().camera;
  if (!(hi > lo)) return {sorted.front()};

  const double width = (hi - lo) / bins;
  auto binOf = [&](double x) {
    const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
  };

  AnchorSet candidates;
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    const int bin = binOf(sorted[begin].camera);
    std::size_t end = begin + 1;
    while (end < sorted.size() && binOf(sorted[end].camera) == bin) ++end;
    const auto members = sorted.subspan(begin, end - begin);
    begin = end;

    if (members.size() == 1) {
      candidates.push_back(members.front());
      continue;
    }

    // Least-squares line on centered coordinates.
    double mx = 0.0, my = 0.0, ymax = 0.0;
    for (const auto& a : members) {
      mx += a.camera;
      my += a.lidar;
      ymax = std::max(ymax, std::abs(a.lidar));
    }
    mx /= members.size();
    my /= members.size();
    double sxx = 0.0, sxy = 0.0;
    for (const auto& a : members) {
      sxx += (a.camera - mx) * (a.camera - mx);
      sxy += (a.camera - mx) * (a.lidar - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;

    // Residual ties resolve toward the domain edge in the outer bins so the
    // chain spans the full observed range, and toward the bin center elsewhere.
    const double tie = 1e-9 * (1.0 + ymax);
    const double center = lo + (bin + 0.5) * width;
    auto preferred = [&](const Anchor& a, const Anchor& b) {
      if (bin == 0) return a.camera < b.camera;
      if (bin == bins - 1) return a.camera > b.camera;
      return std::abs(a.camera - center) < std::abs(b.camera - center);
    };
    auto residual = [&](const Anchor& a) {
      return std::abs(a.lidar - (my + slope * (a.camera - mx)));
    };
    double min_residual = std::numeric_limits<double>::infinity();
    for (const auto& a : members) min_residual = std::min(min_residual, residual(a));
    const Anchor* best = nullptr;
    for (const auto& a : members) {
      if (residual(a) > min_residual + tie) continue;
      if (best == nullptr || preferred(a, *best)) best = &a;
    }
    candidates.push_back(*best);
  }
  return candidates;
}

bool slopesNondecreasing(const Anchor& a, const Anchor& b, const Anchor& c) {
  const double s1 = (b.lidar - a.lidar) / (b.camera - a.camera);
  const double s2 = (c.lidar - b.lidar) / (c.camera - b.camera);
  const double scale = std::max({1.0, std::abs(s1), std::abs(s2)});
  return s2 >= s1 - kSlopeTolerance * scale;
}

bool isMonotoneConvex(std::span<const Anchor> chain) {
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (!(chain[i].camera > chain[i - 1].camera)) return false;
    if (!(chain[i].lidar >= chain[i - 1].lidar)) return false;
    if (i >= 2 && !slopesNondecreasing(chain[i - 2], chain[i - 1], chain[i])) return false;
  }
  return true;
}

AnchorSet longestConvexChain(std::span<const Anchor> c) {
  const std::size_t m = c.size();
  if (m <= 1) return AnchorSet(c.begin(), c.end());
  for (std::size_t i = 1; i < m; ++i) {
    if (!(c[i].camera >= c[i - 1].camera)) {
      throw std::invalid_argument("longestConvexChain: candidates must be sorted by camera depth");
    }
  }

  // length[j][i]: longest valid chain whose last edge is j -> i (0 = invalid).
  // The feasibility of appending i depends on the last two chain points, so
  // the state is an edge rather than an end point.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::vector<int>> length(m, std::vector<int>(m, 0));
  std::vector<std::vector<std::size_t>> parent(m, std::vector<std::size_t>(m, kNone));
  auto slope = [&](std::size_t a, std::size_t b) {
    return (c[b].lidar - c[a].lidar) / (c[b].camera - c[a].camera);
  };

  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (!(c[i].camera > c[j].camera) || !(c[i].lidar >= c[j].lidar)) continue;
      int best = 2;
      std::size_t from = kNone;
      for (std::size_t k = 0; k < j; ++k) {
        if (length[k][j] == 0 || !slopesNondecreasing(c[k], c[j], c[i])) continue;
        const int len = length[k][j] + 1;
        if (len > best || (len == best && from != kNone && slope(k, j) > slope(from, j))) {
          best = len;
          from = k;
        }
      }
      length[j][i] = best;
      parent[j][i] = from;
    }
  }

  int best_len = 1;
  std::size_t end_j = kNone, end_i = kNone;
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const int len = length[j][i];
      if (len == 0) continue;
      if (len > best_len || (len == best_len && end_i != kNone && slope(j, i) < slope(end_j, end_i))) {
        best_len = len;
        end_j = j;
        end_i = i;
      }
    }
  }
  if (end_i == kNone) return {c.front()};

  std::vector<std::size_t> idx{end_i, end_j};
  for (std::size_t j = end_j, i = end_i; parent[j][i] != kNone;) {
    const std::size_t k = parent[j][i];
    idx.push_back(k);
    i = j;
    j = k;
  }
  AnchorSet chain;
  for (auto it = idx.rbegin(); it != idx.rend(); ++it) chain.push_back(c[*it]);
  return chain;
}

AnchorSet subsampleChain(std::span<const Anchor> chain, int target_count) {
  const auto n = chain.size();
  const auto t = static_cast<std::size_t>(std::max(target_count, 2));
  if (n <= t) return AnchorSet(chain.begin(), chain.end());
  const double lo = chain.front().camera;
  const double hi = chain.back().camera;

  AnchorSet out;
  std::size_t next = 0;  // smallest index still available
  for (std::size_t k = 0; k < t; ++k) {
    const double target = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(t - 1);
    const std::size_t last_allowed = n - (t - k);  // leave room for the rest
    std::size_t pick = next;
    for (std::size_t i = next; i <= last_allowed; ++i) {
      if (std::abs(chain[i].camera - target) < std::abs(chain[pick].camera - target)) pick = i;
      if (chain[i].camera > target) break;
    }
    out.push_back(chain[pick]);
    next = pick + 1;
  }
  return out;
}

AnchorSet selectAnchors(std::span<const Anchor> raw, int target_count) {
  if (target_count < 2) throw std::invalid_argument("target anchor count must be at least 2");
  if (raw.empty()) throw NoAnchorsError();
  const AnchorSet candidates = thinCandidates(raw, target_count);
  const AnchorSet chain = longestConvexChain(candidates);
  if (chain.size() < 2) throw DegenerateAnchorsError();
  return subsampleChain(chain, target_count);
}

double remapValue(std::span<const Anchor> anchors, double x) {
  if (x <= anchors.front().camera) return anchors.front().lidar;
  if (x > anchors.back().camera) return anchors.back().lidar;
  // First anchor with camera >= x; x lies in (prev, it].
  const auto it = std::lower_bound(anchors.begin(), anchors.end(), x,
                                   [](const Anchor& a, double value) { return a.camera < value; });
  const Anchor& hi = *it;
  const Anchor& lo = *(it - 1);
  return lo.lidar + (hi.lidar - lo.lidar) / (hi.camera - lo.camera) * (x - lo.camera);
}

DepthImage remapDepth(const NormalizedDepthImage& img, std::span<const Anchor> anchors) {
  if (anchors.size() < 2) throw DegenerateAnchorsError();
  DepthImage out(img.intrinsics);
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      if (img.valid(v, u)) out.depth(v, u) = remapValue(anchors, img.values(v, u));
    }
  }
  return out;
}

RefineResult refineDepth(const DepthImage& ldp, const NormalizedDepthImage& cdp,
                         int target_count) {
  RefineResult result;
  result.anchors = selectAnchors(extractAnchors(ldp, cdp), target_count);
  result.depth = remapDepth(cdp, result.anchors);
  return result;
}

DepthMetrics depthMetrics(const DepthImage& prediction, const DepthImage& truth) {
  if (prediction.width() != truth.width() || prediction.height() != truth.height()) {
    throw std::invalid_argument("depthMetrics: resolution mismatch");
  }
  DepthMetrics m;
  double sq = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (int v = 0; v < truth.height(); ++v) {
    for (int u = 0; u < truth.width(); ++u) {
      const double t = truth.depth(v, u);
      const double p = prediction.depth(v, u);
      if (!(t > 0.0) || !(p > 0.0)) continue;
      const double e = p - t;
      ++m.count;
      m.mae += std::abs(e);
      sq += e * e;
      m.abs_rel += std::abs(e) / t;
      m.sq_rel += e * e / t;
      const double ratio = std::max(p / t, t / p);
      d1 += ratio < 1.25;
      d2 += ratio < 1.25 * 1.25;
      d3 += ratio < 1.25 * 1.25 * 1.25;
    }
  }
  if (m.count == 0) return m;
  const double n = static_cast<double>(m.count);
  m.mae /= n;
  m.rmse = std::sqrt(sq / n);
  m.abs_rel /= n;
  m.sq_rel /= n;
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

}  // namespace lccal
