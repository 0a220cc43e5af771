#pragma once

#include <vector>

#include "scenediff/mesh.hpp"
#include "scenediff/scene.hpp"

namespace scenediff {

/// Thresholds of the relation labeling rules (scene units).
struct RelationRules {
  double dominance = 0.6;          // |delta_axis| > dominance * |delta|
  double margin = 0.05;            // and |delta_axis| > margin
  double support_gap_min = -0.01;  // vertical gap window for support
  double support_gap_max = 0.02;
  double support_overlap = 0.6;    // fraction of the supported XZ hull over the supporter
  double contact_distance = 0.005;
  int gap_resolution = 8;
};

/// Spatial label of i relative to j from centroid delta c_i - c_j.
/// Left is -X, front is -Z, up is +Y.
SpatialRel spatial_label(const Vec3& ci, const Vec3& cj, const RelationRules& rules = {});

/// Relations implied by the current poses. j supports i when their vertical
/// gap lies in the support window and enough of i's XZ hull lies over j's;
/// among several candidates the smallest |gap| wins. Laterally touching pairs
/// without support get a symmetric contact. attach is never derived.
RelationGraphs derive_relations(const Scene& scene, const RelationRules& rules = {});
RelationGraphs derive_relations(const std::vector<TriMesh>& posed, const std::vector<Vec3>& centroids,
                                const RelationRules& rules = {});

}  // namespace scenediff
