#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// Convex polygon in the XZ plane (x -> first coordinate, z -> second), CCW,
/// with no three collinear vertices. Fewer than three vertices means the
/// input projected onto a point or a segment.
struct Hull2D {
  std::vector<Vec2> vertices;
  /// Index of each hull vertex in the input point list.
  std::vector<int> indices;

  bool degenerate() const { return vertices.size() < 3; }
  std::size_t size() const { return vertices.size(); }
  double area() const;
  /// Closed containment.
  bool contains(const Vec2& p) const;
};

inline Vec2 xz(const Vec3& p) { return {p.x(), p.z()}; }

/// Andrew's monotone chain; collinear points are dropped.
Hull2D convex_hull(std::span<const Vec2> points);
Hull2D xz_hull(std::span<const Vec3> points);
Hull2D xz_hull(const TriMesh& mesh);

/// Distance from p to the segment [a, b]; works with any scalar type.
template <class T>
T point_segment_distance_2d(const Eigen::Matrix<T, 2, 1>& p, const Eigen::Matrix<T, 2, 1>& a,
                            const Eigen::Matrix<T, 2, 1>& b) {
  using std::sqrt;
  const Eigen::Matrix<T, 2, 1> ab = b - a;
  const T len_sq = ab.squaredNorm();
  T s = T(0.0);
  if (len_sq > T(0.0)) {
    s = (p - a).dot(ab) / len_sq;
    if (s < T(0.0)) s = T(0.0);
    if (s > T(1.0)) s = T(1.0);
  }
  const Eigen::Matrix<T, 2, 1> d = p - (a + s * ab);
  return sqrt(d.squaredNorm());
}

/// 0 inside or on the hull, otherwise the exact distance to its boundary.
/// `nearest_edge` receives the boundary edge (from vertex k to k+1) realizing
/// the distance, or -1 when p is inside.
double point_to_hull_distance(const Vec2& p, const Hull2D& hull, int* nearest_edge = nullptr);

/// Sutherland-Hodgman clip of a convex subject polygon by a convex CCW clip
/// polygon. Either side with fewer than three vertices yields an empty result.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);

/// Signed shoelace area (positive for CCW).
double polygon_area(std::span<const Vec2> polygon);

}  // namespace scenediff::geom
