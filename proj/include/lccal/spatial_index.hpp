#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace lccal {

/// Exact Euclidean nearest-neighbor search over a fixed point set
/// (kd-tree with axis-aligned median splits). Immutable after construction,
/// so concurrent queries are safe.
class SpatialIndex {
 public:
  struct Neighbor {
    std::size_t index = 0;
    double squared_distance = 0.0;
  };

  SpatialIndex() = default;
  explicit SpatialIndex(std::span<const Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

  /// Throws std::logic_error on an empty index.
  Neighbor nearest(const Eigen::Vector3d& query) const;

 private:
  struct Node {
    // Leaf when axis < 0: points order_[begin, end).
    std::int32_t axis = -1;
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Eigen::Vector3d& q, Neighbor& best) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lccal
