#include "scenediff/geom/chamfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenediff::geom {

PointGrid::PointGrid(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) return;
  Aabb box;
  for (const Vec3& p : points_) box.extend(p);
  origin_ = box.lo;
  upper_ = box.hi;
  const Vec3 ext = box.extent().cwiseMax(1e-9);
  // Roughly two points per cell over the box volume.
  const double volume = ext.prod();
  cell_ = std::cbrt(volume * 2.0 / static_cast<double>(points_.size()));
  cell_ = std::max({cell_, ext.maxCoeff() / 256.0, 1e-9});
  for (int a = 0; a < 3; ++a) {
    dims_[a] = std::clamp(static_cast<int>(std::ceil(ext[a] / cell_)), 1, 256);
  }
  const int ncell = dims_.prod();
  std::vector<int> counts(ncell + 1, 0);
  std::vector<int> cell_index(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Eigen::Vector3i c = cell_of(points_[i]);
    cell_index[i] = flat(c.x(), c.y(), c.z());
    ++counts[cell_index[i] + 1];
  }
  for (int c = 0; c < ncell; ++c) counts[c + 1] += counts[c];
  cell_start_ = counts;
  cell_items_.resize(points_.size());
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) cell_items_[fill[cell_index[i]]++] = static_cast<int>(i);
}

Eigen::Vector3i PointGrid::cell_of(const Vec3& p) const {
  Eigen::Vector3i c;
  for (int a = 0; a < 3; ++a) {
    c[a] = std::clamp(static_cast<int>(std::floor((p[a] - origin_[a]) / cell_)), 0, dims_[a] - 1);
  }
  return c;
}

PointGrid::Hit PointGrid::nearest(const Vec3& query) const {
  Hit best{-1, std::numeric_limits<double>::infinity()};
  if (points_.empty()) return best;
  const Eigen::Vector3i c = cell_of(query);
  // Distance from the query to the grid box; cells in ring r+1 are at least
  // sqrt(d0^2 + (r h)^2) away because the projection onto a convex box is
  // orthogonal.
  const Vec3 clamped = query.cwiseMax(origin_).cwiseMin(upper_);
  const double d0_sq = (query - clamped).squaredNorm();
  double best_sq = std::numeric_limits<double>::infinity();
  const int max_ring = dims_.maxCoeff();
  for (int r = 0; r <= max_ring; ++r) {
    for (int z = c.z() - r; z <= c.z() + r; ++z) {
      if (z < 0 || z >= dims_.z()) continue;
      for (int y = c.y() - r; y <= c.y() + r; ++y) {
        if (y < 0 || y >= dims_.y()) continue;
        const bool shell_yz = std::abs(z - c.z()) == r || std::abs(y - c.y()) == r;
        for (int x = c.x() - r; x <= c.x() + r; ++x) {
          if (x < 0 || x >= dims_.x()) continue;
          if (!shell_yz && std::abs(x - c.x()) != r) continue;
          const int cell = flat(x, y, z);
          for (int k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
            const int idx = cell_items_[k];
            const double d = (points_[idx] - query).squaredNorm();
            if (d < best_sq || (d == best_sq && idx < best.index)) {
              best_sq = d;
              best.index = idx;
            }
          }
        }
      }
    }
    const double bound = static_cast<double>(r) * cell_;
    if (best.index >= 0 && best_sq < d0_sq + bound * bound) break;
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

std::vector<PointGrid::Hit> nearest_neighbors(std::span<const Vec3> queries, const PointGrid& grid) {
  std::vector<PointGrid::Hit> out(queries.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(queries.size()); ++i) out[i] = grid.nearest(queries[i]);
  return out;
}

std::vector<double> signed_chamfer(const SurfaceSample& points, const SurfaceSample& others) {
  std::vector<double> out(points.size(), kNoOtherSentinel);
  if (others.empty()) return out;
  const PointGrid grid(others.points);
  const auto hits = nearest_neighbors(points.points, grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& q = others.points[hits[i].index];
    const double side = others.normals[hits[i].index].dot(points.points[i] - q);
    out[i] = side < 0.0 ? -hits[i].distance : hits[i].distance;
  }
  return out;
}

std::vector<double> nearest_plane_distance(const SurfaceSample& points, const SurfaceSample& others) {
  std::vector<double> out(points.size(), kNoOtherSentinel);
  if (others.empty()) return out;
  const PointGrid grid(others.points);
  const auto hits = nearest_neighbors(points.points, grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& q = others.points[hits[i].index];
    out[i] = others.normals[hits[i].index].dot(points.points[i] - q);
  }
  return out;
}

}  // namespace scenediff::geom
