#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// Returned when the XZ projections do not overlap or no column hits both meshes.
inline constexpr double kNoOverlapGap = std::numeric_limits<double>::infinity();
inline constexpr int kDefaultGapResolution = 8;

/// Discrete choices behind one vertical_gap value. Re-evaluating the gap from
/// a witness with perturbed vertices differentiates it with the choices fixed.
struct GapWitness {
  double gap = kNoOverlapGap;
  int column_x = -1;
  int column_z = -1;
  int face_upper = -1;
  int face_lower = -1;
  // Overlap box bounds lo.x, hi.x, lo.z, hi.z: which mesh (0 upper, 1 lower)
  // and which of its vertices supplies each bound.
  std::array<int, 4> box_mesh{};
  std::array<int, 4> box_vertex{};

  bool found() const { return face_upper >= 0; }
};

/// Minimum over a resolution x resolution grid of vertical rays, cast at cell
/// centres of the XZ overlap of the two bounding boxes, of (lowest surface of
/// `upper`) - (highest surface of `lower`). Negative means interpenetration.
GapWitness vertical_gap_witness(const TriMesh& upper, const TriMesh& lower,
                                int resolution = kDefaultGapResolution);
double vertical_gap(const TriMesh& upper, const TriMesh& lower, int resolution = kDefaultGapResolution);
/// vertical_gap with extra rays through every vertex of either mesh inside
/// the overlap, which makes vertex-on-face contacts exact. Used for dropping.
double contact_gap(const TriMesh& upper, const TriMesh& lower, int resolution = kDefaultGapResolution);

namespace detail {

// Height of the plane through triangle (a, b, c) at (x, z), by barycentric
// interpolation of the XZ projection.
template <class T, class V>
T face_height_at(const V& a, const V& b, const V& c, const T& x, const T& z) {
  const T det = (b[0] - a[0]) * (c[2] - a[2]) - (c[0] - a[0]) * (b[2] - a[2]);
  const T wb = ((x - a[0]) * (c[2] - a[2]) - (c[0] - a[0]) * (z - a[2])) / det;
  const T wc = ((b[0] - a[0]) * (z - a[2]) - (x - a[0]) * (b[2] - a[2])) / det;
  return a[1] + wb * (b[1] - a[1]) + wc * (c[1] - a[1]);
}

}  // namespace detail

/// The gap of a found witness evaluated on (possibly autodiff-typed) vertices.
template <class T>
T vertical_gap_from_witness(const GapWitness& w, std::span<const Eigen::Matrix<T, 3, 1>> upper_vertices,
                            const std::vector<Face>& upper_faces,
                            std::span<const Eigen::Matrix<T, 3, 1>> lower_vertices,
                            const std::vector<Face>& lower_faces, int resolution = kDefaultGapResolution) {
  auto bound = [&](int k, int axis) -> T {
    const auto& verts = w.box_mesh[k] == 0 ? upper_vertices : lower_vertices;
    return verts[w.box_vertex[k]][axis];
  };
  const T lo_x = bound(0, 0), hi_x = bound(1, 0), lo_z = bound(2, 2), hi_z = bound(3, 2);
  const T x = lo_x + (hi_x - lo_x) * ((w.column_x + 0.5) / resolution);
  const T z = lo_z + (hi_z - lo_z) * ((w.column_z + 0.5) / resolution);
  const Face& fu = upper_faces[w.face_upper];
  const Face& fl = lower_faces[w.face_lower];
  const T y_up = detail::face_height_at(upper_vertices[fu[0]], upper_vertices[fu[1]], upper_vertices[fu[2]], x, z);
  const T y_low = detail::face_height_at(lower_vertices[fl[0]], lower_vertices[fl[1]], lower_vertices[fl[2]], x, z);
  return y_up - y_low;
}

}  // namespace scenediff::geom
