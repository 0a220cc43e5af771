#pragma once

#include <array>

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

using Triangle = std::array<Vec3, 3>;

/// Tolerance for coplanarity and touching decisions in tri_tri_intersect.
inline constexpr double kTriEps = 1e-9;

/// True iff the closed triangles share a point (touching counts).
/// Non-coplanar pairs use the plane-crossing interval test; coplanar pairs
/// (all vertex distances within kTriEps) fall back to a 2-D overlap test.
/// Throws DegenerateTriangle for area <= 1e-12.
bool tri_tri_intersect(const Triangle& t1, const Triangle& t2);

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t);
double point_triangle_distance(const Vec3& p, const Triangle& t);
double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);
/// 0 when the triangles intersect.
double triangle_distance(const Triangle& t1, const Triangle& t2);

}  // namespace scenediff::geom
