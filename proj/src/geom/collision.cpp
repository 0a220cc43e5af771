#include "scenediff/geom/collision.hpp"

#include <algorithm>
#include <optional>

#include "scenediff/geom/triangle.hpp"

namespace scenediff::geom {

std::vector<Bvh> build_bvhs(const std::vector<TriMesh>& meshes) {
  std::vector<std::optional<Bvh>> slots(meshes.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(meshes.size()); ++i) slots[i].emplace(meshes[i]);
  std::vector<Bvh> out;
  out.reserve(meshes.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<CollisionPair> find_collision_pairs(const std::vector<TriMesh>& meshes) {
  if (meshes.size() < 2) return {};
  return find_collision_pairs(meshes, build_bvhs(meshes));
}

std::vector<CollisionPair> find_collision_pairs(const std::vector<TriMesh>& meshes,
                                                const std::vector<Bvh>& bvhs) {
  const int n = static_cast<int>(meshes.size());
  std::vector<std::pair<int, int>> object_pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (bvhs[a].bounds().overlaps(bvhs[b].bounds())) object_pairs.emplace_back(a, b);
    }
  }
  std::vector<std::vector<CollisionPair>> per_pair(object_pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < static_cast<int>(object_pairs.size()); ++k) {
    const auto [a, b] = object_pairs[k];
    for (const auto& [fa, fb] : bvhs[a].overlapping_faces(bvhs[b])) {
      if (tri_tri_intersect(meshes[a].triangle(fa), meshes[b].triangle(fb))) {
        per_pair[k].push_back({a, fa, b, fb});
      }
    }
  }
  std::vector<CollisionPair> out;
  for (auto& v : per_pair) out.insert(out.end(), v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scenediff::geom
