#pragma once

#include <compare>
#include <vector>

#include "scenediff/geom/bvh.hpp"
#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// One intersecting cross-object triangle pair, stored once with obj_a < obj_b.
struct CollisionPair {
  int obj_a = 0;
  int face_a = 0;
  int obj_b = 0;
  int face_b = 0;
  auto operator<=>(const CollisionPair&) const = default;
};

/// The set C: all cross-object face pairs whose closed triangles intersect.
/// Object pairs are processed in parallel; output is sorted, so it does not
/// depend on scheduling.
std::vector<CollisionPair> find_collision_pairs(const std::vector<TriMesh>& meshes);
std::vector<CollisionPair> find_collision_pairs(const std::vector<TriMesh>& meshes,
                                                const std::vector<Bvh>& bvhs);

/// BVHs for every mesh, built in parallel.
std::vector<Bvh> build_bvhs(const std::vector<TriMesh>& meshes);

}  // namespace scenediff::geom
