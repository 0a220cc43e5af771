#pragma once

#include "scenediff/mesh.hpp"
#include "scenediff/scene.hpp"

namespace scenediff {

inline constexpr int kDescriptorSamples = 256;
inline constexpr std::uint64_t kDescriptorSeed = 0x5eed5eedULL;

/// [extent_x, extent_y, extent_z, surface area, |volume|, pc_sd_1, pc_sd_2,
/// pc_sd_3]: bounding-box extents, then the principal-component standard
/// deviations (descending) of a fixed-seed surface sample. Faces are put in
/// a canonical order first, so vertex and face order do not matter.
/// Throws EmptyMesh.
ShapeDescriptor shape_descriptor(const TriMesh& mesh);

/// Face soup of the mesh with faces sorted by coordinates and each face
/// rotated to start at its lexicographically smallest corner.
TriMesh canonical_face_order(const TriMesh& mesh);

}  // namespace scenediff
