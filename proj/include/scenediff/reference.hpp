#pragma once

// Serial brute-force references for the parallel kernels. They are kept in
// the library so the tests, the acceptance suite and the benchmark can all
// compare against the same oracle.

#include <cstdint>
#include <utility>
#include <vector>

#include "scenediff/geom/chamfer.hpp"
#include "scenediff/geom/collision.hpp"
#include "scenediff/geom/sampling.hpp"
#include "scenediff/mesh.hpp"

namespace scenediff {
struct NoiseSchedule;
}

namespace scenediff::reference {

/// All face pairs whose padded boxes overlap, O(F1 * F2).
std::vector<std::pair<int, int>> box_overlap_pairs(const TriMesh& a, const TriMesh& b);

/// Exhaustive O(F^2) cross-object triangle intersection scan.
std::vector<geom::CollisionPair> collision_pairs(const std::vector<TriMesh>& meshes);

/// Exhaustive nearest-neighbour signed Chamfer distance.
std::vector<double> signed_chamfer(const geom::SurfaceSample& points, const geom::SurfaceSample& others);

/// Plain DDPM ancestral step with posterior variance, no guidance, written
/// element by element. With clip_x0 > 0 the mean goes through the clipped
/// x_0 estimate; otherwise it uses the direct noise form.
Matrix ddpm_step(const Matrix& x_t, int t, const Matrix& eps_hat, const NoiseSchedule& schedule, const Matrix& z,
                 double clip_x0 = 0.0);

}  // namespace scenediff::reference
