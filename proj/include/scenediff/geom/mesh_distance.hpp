#pragma once

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// Generalized winding number of p with respect to a closed mesh
/// (about 1 inside, 0 outside).
double winding_number(const Vec3& p, const TriMesh& mesh);

/// Exact unsigned distance from p to the mesh surface.
double point_mesh_distance(const Vec3& p, const TriMesh& mesh);

/// Distance to the surface, negative when the winding number exceeds 1/2.
double signed_point_mesh_distance(const Vec3& p, const TriMesh& mesh);

/// Minimum distance between two meshes, 0 if they touch. Searching stops
/// once the answer is known to exceed `cutoff`; the returned value is then
/// only guaranteed to be > cutoff.
double mesh_mesh_distance(const TriMesh& a, const TriMesh& b, double cutoff);

}  // namespace scenediff::geom
