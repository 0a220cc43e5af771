#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "scenediff/relations.hpp"
#include "scenediff/scene.hpp"

namespace scenediff {

struct MetricOptions {
  double penetration_threshold = 0.01;
  int penetration_samples = 2000;
  std::uint64_t seed = 0;
  int stability_runs = 10;
  double jitter_sigma = 0.002;
  int settle_max_iters = 50;
  RelationRules rules;
};

// ---- Col_mesh ----------------------------------------------------------------

/// Estimated penetration depth between two closed world meshes: the largest
/// distance to the other surface over surface samples of either mesh that lie
/// inside the other (winding number above 1/2). 0 when no sample is inside.
double penetration_depth(const TriMesh& a, const TriMesh& b, int samples, std::uint64_t seed);

/// Per object: part of at least one intersection deeper than the threshold.
std::vector<bool> collision_flags(const Scene& scene, const MetricOptions& opts = {});
/// Flagged objects over all objects in the set.
double col_mesh_rate(const std::vector<Scene>& scenes, const MetricOptions& opts = {});

// ---- GRecall -----------------------------------------------------------------

struct RecallCounts {
  int spatial_total = 0;
  int spatial_hit = 0;
  int physical_total = 0;
  int physical_hit = 0;

  /// Micro-average over both graphs; 1 when there is no edge at all.
  double recall() const;
  RecallCounts& operator+=(const RecallCounts& o);
};

/// Non-none edges of `truth` reproduced by derive_relations on `scene`.
/// Throws GraphSizeMismatch.
RecallCounts recall_counts(const Scene& scene, const RelationGraphs& truth, const RelationRules& rules = {});
double grecall(const std::vector<Scene>& scenes, const std::vector<RelationGraphs>& truth,
               const RelationRules& rules = {});

// ---- ASD ---------------------------------------------------------------------

/// |min over the supported object's vertices of the signed distance to the
/// supporter| for every support edge of `graphs`, in row-major edge order.
std::vector<double> support_distances(const Scene& scene, const RelationGraphs& graphs);
/// Mean over all support pairs in the set; empty when there are none.
std::optional<double> asd(const std::vector<Scene>& scenes);

// ---- settling ----------------------------------------------------------------

struct SettleResult {
  Scene scene;
  int iterations = 0;
  bool converged = false;
  int topples = 0;
};

/// Quasi-static settling. Each pass visits objects bottom-up: an object drops
/// along -Y onto the highest surface below it (another object or the floor);
/// if its centre of mass then projects outside the contact region, it
/// topples: it is snapped to its nearest stable axis alignment and dropped
/// again. If it is still unbalanced on an object it slides off along the
/// overhang direction and falls in the next pass. Passes repeat until
/// nothing moves or max_iters is reached.
SettleResult settle(const Scene& scene, int max_iters = 50, int gap_resolution = 8);

/// Sum over objects of |volume| times centroid height above the floor.
double potential_energy(const Scene& scene);

// ---- stability ---------------------------------------------------------------

struct StabilityResult {
  double stability = 1.0;  // fraction of unchanged non-none relations
  int edges = 0;           // before-edges per run
  int changed = 0;         // summed over runs
};

/// Settles jittered copies of the scene and compares derive_relations before
/// and after, restricted to non-none before-edges of both graphs.
StabilityResult stability(const Scene& scene, const MetricOptions& opts = {});
double stability(const std::vector<Scene>& scenes, const MetricOptions& opts = {});

// ---- report ------------------------------------------------------------------

struct SceneMetrics {
  int objects = 0;
  int flagged = 0;
  RecallCounts recall;
  std::vector<double> support_distances;
  double stability = 1.0;
  double seconds = 0.0;  // wall time, printed but never serialized
};

struct MetricReport {
  double col_mesh = 0.0;
  double grecall = 1.0;
  double grecall_spatial = 1.0;
  double grecall_physical = 1.0;
  std::optional<double> asd;
  double stability = 1.0;
  std::vector<SceneMetrics> per_scene;
};

/// Full suite. `truth` supplies the ground-truth graphs (also used as the
/// support edges for ASD). Throws GraphSizeMismatch on count mismatch.
MetricReport evaluate(const std::vector<Scene>& scenes, const std::vector<RelationGraphs>& truth,
                      const MetricOptions& opts = {});

nlohmann::json report_to_json(const MetricReport& report);
/// Fixed-order table with the column names Col_mesh, GRecall, ASD, Stability.
std::string report_table(const MetricReport& report);

}  // namespace scenediff
