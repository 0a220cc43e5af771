#include "scenediff/relations.hpp"

#include <cmath>
#include <limits>

#include "scenediff/geom/hull2d.hpp"
#include "scenediff/geom/mesh_distance.hpp"
#include "scenediff/geom/vertical_gap.hpp"

namespace scenediff {

SpatialRel spatial_label(const Vec3& ci, const Vec3& cj, const RelationRules& rules) {
  const Vec3 d = ci - cj;
  const double len = d.norm();
  int axis = 0;
  d.cwiseAbs().maxCoeff(&axis);
  const double v = d[axis];
  if (!(std::abs(v) > rules.dominance * len) || !(std::abs(v) > rules.margin)) return SpatialRel::none;
  switch (axis) {
    case 0: return v < 0 ? SpatialRel::left_of : SpatialRel::right_of;
    case 1: return v > 0 ? SpatialRel::above : SpatialRel::below;
    default: return v < 0 ? SpatialRel::in_front_of : SpatialRel::behind;
  }
}

RelationGraphs derive_relations(const Scene& scene, const RelationRules& rules) {
  std::vector<Vec3> centroids;
  for (const SceneObject& o : scene.objects) centroids.push_back(o.position);
  return derive_relations(posed_meshes_lenient(scene), centroids, rules);
}

RelationGraphs derive_relations(const std::vector<TriMesh>& posed, const std::vector<Vec3>& centroids,
                                const RelationRules& rules) {
  const int n = static_cast<int>(posed.size());
  RelationGraphs g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) g.spatial(i, j) = spatial_label(centroids[i], centroids[j], rules);
    }
  }

  std::vector<geom::Hull2D> hulls(n);
  for (int i = 0; i < n; ++i) hulls[i] = geom::xz_hull(posed[i]);

  // Support candidates per ordered pair, evaluated in parallel.
  std::vector<double> gap(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n * n; ++k) {
    const int i = k / n, j = k % n;
    if (i == j || hulls[i].degenerate() || hulls[j].degenerate()) continue;
    const double d = geom::vertical_gap(posed[i], posed[j], rules.gap_resolution);
    if (!(d >= rules.support_gap_min && d <= rules.support_gap_max)) continue;
    const auto overlap = geom::clip_convex(hulls[i].vertices, hulls[j].vertices);
    if (geom::polygon_area(overlap) >= rules.support_overlap * hulls[i].area()) gap[k] = d;
  }

  std::vector<int> supporter(n, -1);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = gap[static_cast<std::size_t>(i) * n + j];
      if (std::isfinite(d) && std::abs(d) < best) {
        // Skip edges that would close a support cycle.
        int walk = j;
        while (walk >= 0 && walk != i) walk = supporter[walk];
        if (walk == i) continue;
        best = std::abs(d);
        supporter[i] = j;
      }
    }
    if (supporter[i] >= 0) g.physical(i, supporter[i]) = PhysicalRel::support;
  }

  std::vector<std::pair<int, int>> lateral;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (supporter[i] != j && supporter[j] != i) lateral.emplace_back(i, j);
    }
  }
  std::vector<char> touching(lateral.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < static_cast<int>(lateral.size()); ++k) {
    const auto [i, j] = lateral[k];
    touching[k] = geom::mesh_mesh_distance(posed[i], posed[j], rules.contact_distance) < rules.contact_distance;
  }
  for (std::size_t k = 0; k < lateral.size(); ++k) {
    if (!touching[k]) continue;
    const auto [i, j] = lateral[k];
    g.physical(i, j) = PhysicalRel::contact;
    g.physical(j, i) = PhysicalRel::contact;
  }
  return g;
}

}  // namespace scenediff
