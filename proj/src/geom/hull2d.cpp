#include "scenediff/geom/hull2d.hpp"

#include <limits>
#include <numeric>

namespace scenediff::geom {

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

double polygon_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    twice += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * twice;
}

double Hull2D::area() const { return degenerate() ? 0.0 : polygon_area(vertices); }

bool Hull2D::contains(const Vec2& p) const { return point_to_hull_distance(p, *this) == 0.0; }

Hull2D convex_hull(std::span<const Vec2> points) {
  std::vector<int> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points[a].x() != points[b].x()) return points[a].x() < points[b].x();
    if (points[a].y() != points[b].y()) return points[a].y() < points[b].y();
    return a < b;
  });
  order.erase(std::unique(order.begin(), order.end(), [&](int a, int b) { return points[a] == points[b]; }),
              order.end());

  Hull2D hull;
  if (order.size() <= 2) {
    for (int i : order) {
      hull.vertices.push_back(points[i]);
      hull.indices.push_back(i);
    }
    return hull;
  }
  std::vector<int> chain(2 * order.size());
  std::size_t k = 0;
  for (int i : order) {
    while (k >= 2 && cross(points[chain[k - 2]], points[chain[k - 1]], points[i]) <= 0.0) --k;
    chain[k++] = i;
  }
  for (std::size_t n = order.size() - 1, lower = k + 1; n-- > 0;) {
    const int i = order[n];
    while (k >= lower && cross(points[chain[k - 2]], points[chain[k - 1]], points[i]) <= 0.0) --k;
    chain[k++] = i;
  }
  chain.resize(k - 1);
  for (int i : chain) {
    hull.vertices.push_back(points[i]);
    hull.indices.push_back(i);
  }
  return hull;
}

Hull2D xz_hull(std::span<const Vec3> points) {
  std::vector<Vec2> projected;
  projected.reserve(points.size());
  for (const Vec3& p : points) projected.push_back(xz(p));
  return convex_hull(projected);
}

Hull2D xz_hull(const TriMesh& mesh) { return xz_hull(mesh.vertices()); }

double point_to_hull_distance(const Vec2& p, const Hull2D& hull, int* nearest_edge) {
  const auto& v = hull.vertices;
  if (nearest_edge) *nearest_edge = -1;
  if (v.empty()) return std::numeric_limits<double>::infinity();
  if (v.size() == 1) {
    if (nearest_edge && p != v[0]) *nearest_edge = 0;
    return (p - v[0]).norm();
  }
  if (v.size() >= 3) {
    bool inside = true;
    for (std::size_t i = 0; i < v.size() && inside; ++i) {
      inside = cross(v[i], v[(i + 1) % v.size()], p) >= 0.0;
    }
    if (inside) return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  const std::size_t edges = v.size() == 2 ? 1 : v.size();
  for (std::size_t i = 0; i < edges; ++i) {
    const double d = point_segment_distance_2d<double>(p, v[i], v[(i + 1) % v.size()]);
    if (d < best) {
      best = d;
      if (nearest_edge) *nearest_edge = static_cast<int>(i);
    }
  }
  if (best == 0.0 && nearest_edge) *nearest_edge = -1;
  return best;
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  std::vector<Vec2> out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> input;
    input.swap(out);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const double dc = cross(a, b, cur);
      const double dp = cross(a, b, prev);
      if (dc >= 0.0) {
        if (dp < 0.0) out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
        out.push_back(cur);
      } else if (dp >= 0.0) {
        out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      }
    }
  }
  if (out.size() < 3) out.clear();
  return out;
}

}  // namespace scenediff::geom
