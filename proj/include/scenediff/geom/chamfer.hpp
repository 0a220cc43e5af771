#pragma once

#include <span>
#include <vector>

#include "scenediff/geom/sampling.hpp"
#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// Value written for every point when there is nothing to compare against.
inline constexpr double kNoOtherSentinel = 1e3;

/// Uniform-grid index answering exact nearest-neighbour queries.
class PointGrid {
 public:
  struct Hit {
    int index = -1;
    double distance = 0.0;
  };

  explicit PointGrid(std::span<const Vec3> points);

  bool empty() const { return points_.empty(); }
  /// Exact nearest point; ties resolve to the lowest index.
  Hit nearest(const Vec3& query) const;

 private:
  Eigen::Vector3i cell_of(const Vec3& p) const;
  int flat(int x, int y, int z) const { return (z * dims_.y() + y) * dims_.x() + x; }

  std::vector<Vec3> points_;
  Vec3 origin_ = Vec3::Zero();
  Vec3 upper_ = Vec3::Zero();
  double cell_ = 1.0;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
};

/// Nearest neighbour of every query (parallel over queries).
std::vector<PointGrid::Hit> nearest_neighbors(std::span<const Vec3> queries, const PointGrid& grid);

/// One-way signed Chamfer distance: |p - q_nn| signed by n_nn . (p - q_nn).
/// Points on the tangent plane count as outside. Empty `others` yields
/// kNoOtherSentinel for every point.
std::vector<double> signed_chamfer(const SurfaceSample& points, const SurfaceSample& others);

/// Signed point-to-plane distance n_nn . (p - q_nn) against the nearest
/// sample's tangent plane. Used as a penetration-depth estimate.
std::vector<double> nearest_plane_distance(const SurfaceSample& points, const SurfaceSample& others);

}  // namespace scenediff::geom
