#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace scenediff {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

/// Row-major dynamic matrix shared by the state vector and the network code.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool empty() const { return (hi.array() < lo.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  Aabb padded(double pad) const { return {lo.array() - pad, hi.array() + pad}; }
  // Closed-set overlap: touching boxes overlap.
  bool overlaps(const Aabb& o) const {
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
  }
};

/// Triangle mesh with derived outward (CCW) unit face normals.
///
/// Meshes are immutable after construction. The validating constructor
/// rejects out-of-range indices and faces with area <= 1e-12.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Vec3>& normals() const { return normals_; }
  std::size_t num_faces() const { return faces_.size(); }
  std::size_t num_vertices() const { return vertices_.size(); }
  bool empty() const { return faces_.empty(); }

  std::array<Vec3, 3> triangle(std::size_t f) const {
    const Face& t = faces_[f];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }
  double face_area(std::size_t f) const;
  double surface_area() const;
  /// Signed volume by the divergence theorem; positive for outward winding.
  double volume() const;
  /// Volume-weighted centroid (falls back to the vertex mean for open meshes).
  Vec3 center_of_mass() const;
  Vec3 vertex_mean() const;
  Aabb bounds() const;
  Aabb face_bounds(std::size_t f) const;

  /// Rigidly transformed copy, v' = R v + t. Normals are rotated, not recomputed.
  TriMesh transformed(const Mat3& rotation, const Vec3& translation) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> normals_;
};

}  // namespace scenediff
