#include "scenediff/geom/mesh_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "scenediff/geom/triangle.hpp"

namespace scenediff::geom {

namespace {

double box_distance(const Aabb& a, const Aabb& b) {
  const Vec3 gap = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0);
  return gap.norm();
}

}  // namespace

double winding_number(const Vec3& p, const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const auto t = mesh.triangle(f);
    const Vec3 a = t[0] - p;
    const Vec3 b = t[1] - p;
    const Vec3 c = t[2] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

double point_mesh_distance(const Vec3& p, const TriMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) best = std::min(best, point_triangle_distance(p, mesh.triangle(f)));
  return best;
}

double signed_point_mesh_distance(const Vec3& p, const TriMesh& mesh) {
  const double d = point_mesh_distance(p, mesh);
  return winding_number(p, mesh) > 0.5 ? -d : d;
}

double mesh_mesh_distance(const TriMesh& a, const TriMesh& b, double cutoff) {
  double best = box_distance(a.bounds(), b.bounds());
  if (best > cutoff) return best;
  best = std::numeric_limits<double>::infinity();
  for (std::size_t fa = 0; fa < a.num_faces(); ++fa) {
    const Aabb ba = a.face_bounds(fa);
    if (box_distance(ba, b.bounds()) >= std::min(best, cutoff + 1e-12)) continue;
    const auto ta = a.triangle(fa);
    for (std::size_t fb = 0; fb < b.num_faces(); ++fb) {
      if (box_distance(ba, b.face_bounds(fb)) >= best) continue;
      best = std::min(best, triangle_distance(ta, b.triangle(fb)));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

}  // namespace scenediff::geom
