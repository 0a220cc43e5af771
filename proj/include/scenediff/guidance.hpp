#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "scenediff/scene.hpp"

namespace scenediff {

enum class GradMode { analytic, finite_difference };
enum class Term { collision, gravity, relation };

GradMode parse_grad_mode(std::string_view s);

struct GuidanceConfig {
  double lambda_c = 7.5e-3;
  double lambda_h = 1e-3;
  double lambda_r = 1e-2;
  double eps_gap = 0.005;   // minimal support clearance
  double theta_h = 0.05;    // floating tolerance above eps_gap
  double floor_reach = 0.5; // unsupported objects this close to the floor rest on it
  int start_t = 200;        // guidance active for t < start_t
  GradMode grad_mode = GradMode::analytic;
  double fd_step = 1e-4;
  int gap_resolution = 8;

  /// Throws ConfigError.
  void validate(int steps) const;
};

/// Energies and the gradient of lambda_c G_C + lambda_h G_H + lambda_r G_R
/// with respect to every object's [p || r6] row.
struct GuidanceReport {
  double g_c = 0.0;
  double g_h = 0.0;
  double g_r = 0.0;
  double weighted = 0.0;
  Matrix gradient;
  int collision_pairs = 0;
  int gravity_violations = 0;
  int relation_vertices = 0;  // projected vertices outside their supporter hull
  int nonfinite_rows = 0;     // zeroed rows
};

/// Mean over intersecting cross-object triangle pairs of the penetration
/// penalty: for each pair, the average hinge depth of each triangle's corners
/// behind the other triangle's plane, averaged over both directions.
double collision_energy(const Scene& scene);
/// Sum of |d_i - eps_gap| over objects whose gap to their supporter (from the
/// support graph, else the floor when within reach) falls outside
/// [eps_gap, eps_gap + theta_h].
double gravity_energy(const Scene& scene, const GuidanceConfig& cfg);
/// Mean over support edges of the mean XZ distance to the supporter hull of
/// the supported object's projected vertices that lie outside it.
double relation_energy(const Scene& scene);

double term_energy(const Scene& scene, Term term, const GuidanceConfig& cfg);

/// Gradient of one unweighted energy with the discrete sets frozen at the
/// current state (forward-mode automatic differentiation).
Matrix term_gradient(const Scene& scene, Term term, const GuidanceConfig& cfg);

/// Central differences with step h on every state entry, sets recomputed at
/// each evaluation.
Matrix term_gradient_fd(const Scene& scene, Term term, const GuidanceConfig& cfg, double h);

/// Composite report, in the configured gradient mode. Non-finite gradient
/// rows are zeroed and logged; pass strict to throw NonFiniteGradient instead.
GuidanceReport composite_gradient(const Scene& scene, const GuidanceConfig& cfg, bool strict = false);

/// Encodes every discrete choice the analytic gradient of `term` freezes
/// (pair sets, hinge activity, witnesses, violation classes). Two states with
/// equal signatures lie on the same smooth piece of the energy.
std::vector<std::int64_t> guidance_signature(const Scene& scene, Term term, const GuidanceConfig& cfg);

}  // namespace scenediff
