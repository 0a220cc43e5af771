#include "scenediff/geom/triangle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenediff/errors.hpp"

namespace scenediff::geom {

namespace {

Vec3 unit_normal(const Triangle& t) {
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]);
  const double len = n.norm();
  if (!(0.5 * len > 1e-12)) throw DegenerateTriangle("triangle area below 1e-12");
  return n / len;
}

std::array<double, 3> plane_distances(const Triangle& t, const Vec3& n, const Vec3& origin) {
  std::array<double, 3> d{};
  for (int i = 0; i < 3; ++i) {
    d[i] = n.dot(t[i] - origin);
    if (std::abs(d[i]) < kTriEps) d[i] = 0.0;
  }
  return d;
}

bool strictly_one_side(const std::array<double, 3>& d) {
  return (d[0] > 0 && d[1] > 0 && d[2] > 0) || (d[0] < 0 && d[1] < 0 && d[2] < 0);
}

// Projection interval of the segment where triangle t crosses a plane.
std::pair<double, double> crossing_interval(const Triangle& t, const std::array<double, 3>& d,
                                            const Vec3& dir) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto take = [&](const Vec3& p) {
    const double s = dir.dot(p);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  };
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    if (d[i] == 0.0) take(t[i]);
    if ((d[i] > 0 && d[j] < 0) || (d[i] < 0 && d[j] > 0)) {
      const double s = d[i] / (d[i] - d[j]);
      take(t[i] + s * (t[j] - t[i]));
    }
  }
  return {lo, hi};
}

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool on_segment_2d(const Vec2& a, const Vec2& b, const Vec2& p) {
  return p.x() >= std::min(a.x(), b.x()) - kTriEps && p.x() <= std::max(a.x(), b.x()) + kTriEps &&
         p.y() >= std::min(a.y(), b.y()) - kTriEps && p.y() <= std::max(a.y(), b.y()) + kTriEps;
}

int sign_eps(double v, double scale) {
  const double tol = kTriEps * std::max(1.0, scale);
  return v > tol ? 1 : (v < -tol ? -1 : 0);
}

bool segments_intersect_2d(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double scale = std::max((b - a).norm(), (d - c).norm());
  const int o1 = sign_eps(orient2d(a, b, c), scale);
  const int o2 = sign_eps(orient2d(a, b, d), scale);
  const int o3 = sign_eps(orient2d(c, d, a), scale);
  const int o4 = sign_eps(orient2d(c, d, b), scale);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment_2d(a, b, c)) return true;
  if (o2 == 0 && on_segment_2d(a, b, d)) return true;
  if (o3 == 0 && on_segment_2d(c, d, a)) return true;
  if (o4 == 0 && on_segment_2d(c, d, b)) return true;
  return false;
}

bool point_in_triangle_2d(const Vec2& p, const std::array<Vec2, 3>& t) {
  const double area = orient2d(t[0], t[1], t[2]);
  const double s = area >= 0 ? 1.0 : -1.0;
  const double tol = kTriEps * std::max(1.0, std::abs(area));
  return s * orient2d(t[0], t[1], p) >= -tol && s * orient2d(t[1], t[2], p) >= -tol &&
         s * orient2d(t[2], t[0], p) >= -tol;
}

bool coplanar_overlap(const Triangle& t1, const Triangle& t2, const Vec3& n) {
  // Drop the dominant normal axis.
  int axis = 0;
  n.cwiseAbs().maxCoeff(&axis);
  const int u = (axis + 1) % 3;
  const int v = (axis + 2) % 3;
  std::array<Vec2, 3> a, b;
  for (int i = 0; i < 3; ++i) {
    a[i] = Vec2(t1[i][u], t1[i][v]);
    b[i] = Vec2(t2[i][u], t2[i][v]);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (segments_intersect_2d(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3])) return true;
    }
  }
  return point_in_triangle_2d(a[0], b) || point_in_triangle_2d(b[0], a);
}

}  // namespace

bool tri_tri_intersect(const Triangle& t1, const Triangle& t2) {
  const Vec3 n1 = unit_normal(t1);
  const Vec3 n2 = unit_normal(t2);

  const auto d1 = plane_distances(t1, n2, t2[0]);
  if (strictly_one_side(d1)) return false;
  const auto d2 = plane_distances(t2, n1, t1[0]);
  if (strictly_one_side(d2)) return false;

  if (d1[0] == 0.0 && d1[1] == 0.0 && d1[2] == 0.0) return coplanar_overlap(t1, t2, n2);
  if (d2[0] == 0.0 && d2[1] == 0.0 && d2[2] == 0.0) return coplanar_overlap(t1, t2, n1);

  Vec3 dir = n1.cross(n2);
  const double len = dir.norm();
  if (len < 1e-15) return coplanar_overlap(t1, t2, n2);
  dir /= len;
  const auto [lo1, hi1] = crossing_interval(t1, d1, dir);
  const auto [lo2, hi2] = crossing_interval(t2, d2, dir);
  return std::max(lo1, lo2) <= std::min(hi1, hi2) + kTriEps;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) {
  // Voronoi-region walk over vertices, edges and the face.
  const Vec3& a = t[0];
  const Vec3& b = t[1];
  const Vec3& c = t[2];
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_triangle_distance(const Vec3& p, const Triangle& t) {
  return (p - closest_point_on_triangle(p, t)).norm();
}

double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double kTiny = 1e-300;
  if (a <= kTiny && e <= kTiny) return r.norm();
  if (a <= kTiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kTiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

double triangle_distance(const Triangle& t1, const Triangle& t2) {
  if (tri_tri_intersect(t1, t2)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    best = std::min(best, point_triangle_distance(t1[i], t2));
    best = std::min(best, point_triangle_distance(t2[i], t1));
    for (int j = 0; j < 3; ++j) {
      best = std::min(best, segment_segment_distance(t1[i], t1[(i + 1) % 3], t2[j], t2[(j + 1) % 3]));
    }
  }
  return best;
}

}  // namespace scenediff::geom
