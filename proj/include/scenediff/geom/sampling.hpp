#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

struct SurfaceSample {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> source_face;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Area-weighted face choice followed by uniform barycentric sampling.
/// Deterministic given the seed. Throws EmptyMesh, or Error when count < 1.
SurfaceSample sample_surface(const TriMesh& mesh, int count, std::uint64_t seed);

/// Concatenation; source_face keeps the per-mesh face index.
SurfaceSample merge_samples(std::span<const SurfaceSample> samples);

}  // namespace scenediff::geom
