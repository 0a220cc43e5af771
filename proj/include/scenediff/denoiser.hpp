#pragma once

#include <cstdint>

#include "scenediff/scene.hpp"
#include "scenediff/schedule.hpp"

namespace scenediff {

/// Per-object surface samples with their signed Chamfer distance to every
/// other object: row i * points + k = [x, y, z, d_scd] of sample k on object i.
struct GeometryFeatures {
  int objects = 0;
  int points = 0;
  Matrix data;
  // A denoiser may memoize its encoding of `data` here, tagged with its own
  // address and a hash of `data` so stale or foreign entries are ignored.
  mutable Matrix encoded;
  mutable const void* encoded_by = nullptr;
  mutable std::uint64_t encoded_hash = 0;

  std::uint64_t hash() const;
};

/// Samples each posed mesh (lenient rotations, seed + i for object i) and
/// measures it against the merged samples of all other objects. A lone object
/// gets geom::kNoOtherSentinel in the distance channel.
GeometryFeatures geometry_features(const Scene& scene, int points, std::uint64_t seed);

/// What a denoiser sees at one reverse step. `x_t` is in normalized
/// coordinates; `scene` carries meshes, shape descriptors and graphs.
struct DenoiserInput {
  const Matrix& x_t;
  int t;
  const Scene& scene;
  const GeometryFeatures* geometry = nullptr;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  /// Predicted noise, N x 9.
  virtual Matrix predict_eps(const DenoiserInput& in) const = 0;
  /// Surface samples per object the denoiser wants; 0 means none.
  virtual int geometry_points() const { return 0; }
  /// Diffusion length the denoiser was built for.
  virtual int steps() const = 0;
};

/// Exact posterior-mean noise for a Gaussian target N(mean, variance I):
/// eps = sqrt(1 - abar) (x_t - sqrt(abar) mean) / (abar variance + 1 - abar).
class AnalyticScoreDenoiser : public Denoiser {
 public:
  AnalyticScoreDenoiser(NoiseSchedule schedule, Matrix mean, double variance);

  Matrix predict_eps(const DenoiserInput& in) const override;
  int steps() const override { return schedule_.steps; }
  const Matrix& mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  NoiseSchedule schedule_;
  Matrix mean_;
  double variance_;
};

}  // namespace scenediff
