#include "scenediff/geom/vertical_gap.hpp"

#include <cmath>
#include <limits>

namespace scenediff::geom {

namespace {

constexpr double kProjectedAreaMin = 1e-14;
constexpr double kBaryEps = 1e-12;

struct Extremes {
  std::array<int, 4> vertex{};  // argmin x, argmax x, argmin z, argmax z
  std::array<double, 4> value{};
};

Extremes extremes(const TriMesh& m) {
  Extremes e;
  const auto& v = m.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int k = static_cast<int>(i);
    if (i == 0 || v[i].x() < v[e.vertex[0]].x()) e.vertex[0] = k;
    if (i == 0 || v[i].x() > v[e.vertex[1]].x()) e.vertex[1] = k;
    if (i == 0 || v[i].z() < v[e.vertex[2]].z()) e.vertex[2] = k;
    if (i == 0 || v[i].z() > v[e.vertex[3]].z()) e.vertex[3] = k;
  }
  e.value = {v[e.vertex[0]].x(), v[e.vertex[1]].x(), v[e.vertex[2]].z(), v[e.vertex[3]].z()};
  return e;
}

// Height of face f at (x, z) if the column passes through its XZ projection.
bool column_hit(const TriMesh& m, int f, double x, double z, double& y) {
  const auto t = m.triangle(f);
  const double det = (t[1].x() - t[0].x()) * (t[2].z() - t[0].z()) - (t[2].x() - t[0].x()) * (t[1].z() - t[0].z());
  if (std::abs(det) < kProjectedAreaMin) return false;
  const double wb = ((x - t[0].x()) * (t[2].z() - t[0].z()) - (t[2].x() - t[0].x()) * (z - t[0].z())) / det;
  const double wc = ((t[1].x() - t[0].x()) * (z - t[0].z()) - (x - t[0].x()) * (t[1].z() - t[0].z())) / det;
  if (wb < -kBaryEps || wc < -kBaryEps || wb + wc > 1.0 + kBaryEps) return false;
  y = t[0].y() + wb * (t[1].y() - t[0].y()) + wc * (t[2].y() - t[0].y());
  return true;
}

}  // namespace

GapWitness vertical_gap_witness(const TriMesh& upper, const TriMesh& lower, int resolution) {
  GapWitness w;
  if (upper.empty() || lower.empty() || resolution < 1) return w;
  const Extremes eu = extremes(upper);
  const Extremes el = extremes(lower);
  // lo bounds take the larger minimum, hi bounds the smaller maximum.
  for (int k = 0; k < 4; ++k) {
    const bool is_lo = k % 2 == 0;
    const bool take_upper = is_lo ? eu.value[k] >= el.value[k] : eu.value[k] <= el.value[k];
    w.box_mesh[k] = take_upper ? 0 : 1;
    w.box_vertex[k] = take_upper ? eu.vertex[k] : el.vertex[k];
  }
  const double lo_x = std::max(eu.value[0], el.value[0]);
  const double hi_x = std::min(eu.value[1], el.value[1]);
  const double lo_z = std::max(eu.value[2], el.value[2]);
  const double hi_z = std::min(eu.value[3], el.value[3]);
  if (lo_x > hi_x || lo_z > hi_z) return w;

  const Aabb ub = upper.bounds();
  const Aabb lb = lower.bounds();
  for (int cx = 0; cx < resolution; ++cx) {
    const double x = lo_x + (hi_x - lo_x) * ((cx + 0.5) / resolution);
    for (int cz = 0; cz < resolution; ++cz) {
      const double z = lo_z + (hi_z - lo_z) * ((cz + 0.5) / resolution);
      double y_up = ub.hi.y() + 1.0;
      int f_up = -1;
      for (std::size_t f = 0; f < upper.num_faces(); ++f) {
        double y;
        if (column_hit(upper, static_cast<int>(f), x, z, y) && y < y_up) {
          y_up = y;
          f_up = static_cast<int>(f);
        }
      }
      if (f_up < 0) continue;
      double y_low = lb.lo.y() - 1.0;
      int f_low = -1;
      for (std::size_t f = 0; f < lower.num_faces(); ++f) {
        double y;
        if (column_hit(lower, static_cast<int>(f), x, z, y) && y > y_low) {
          y_low = y;
          f_low = static_cast<int>(f);
        }
      }
      if (f_low < 0) continue;
      const double gap = y_up - y_low;
      if (gap < w.gap) {
        w.gap = gap;
        w.column_x = cx;
        w.column_z = cz;
        w.face_upper = f_up;
        w.face_lower = f_low;
      }
    }
  }
  return w;
}

double vertical_gap(const TriMesh& upper, const TriMesh& lower, int resolution) {
  return vertical_gap_witness(upper, lower, resolution).gap;
}

double contact_gap(const TriMesh& upper, const TriMesh& lower, int resolution) {
  double best = vertical_gap(upper, lower, resolution);
  if (!std::isfinite(best)) return best;
  const Aabb ub = upper.bounds();
  const Aabb lb = lower.bounds();
  const double lo_x = std::max(ub.lo.x(), lb.lo.x()), hi_x = std::min(ub.hi.x(), lb.hi.x());
  const double lo_z = std::max(ub.lo.z(), lb.lo.z()), hi_z = std::min(ub.hi.z(), lb.hi.z());
  auto probe = [&](double x, double z) {
    if (x < lo_x || x > hi_x || z < lo_z || z > hi_z) return;
    double y_up = std::numeric_limits<double>::infinity(), y_low = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < upper.num_faces(); ++f) {
      double y;
      if (column_hit(upper, static_cast<int>(f), x, z, y)) y_up = std::min(y_up, y);
    }
    for (std::size_t f = 0; f < lower.num_faces(); ++f) {
      double y;
      if (column_hit(lower, static_cast<int>(f), x, z, y)) y_low = std::max(y_low, y);
    }
    if (std::isfinite(y_up) && std::isfinite(y_low)) best = std::min(best, y_up - y_low);
  };
  for (const Vec3& v : upper.vertices()) probe(v.x(), v.z());
  for (const Vec3& v : lower.vertices()) probe(v.x(), v.z());
  return best;
}

}  // namespace scenediff::geom
