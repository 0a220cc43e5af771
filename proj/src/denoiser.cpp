#include "scenediff/denoiser.hpp"

#include <cmath>

#include "scenediff/errors.hpp"
#include "scenediff/geom/chamfer.hpp"
#include "scenediff/geom/sampling.hpp"

namespace scenediff {

std::uint64_t GeometryFeatures::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(data.size()) * sizeof(double); ++i) {
    h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

GeometryFeatures geometry_features(const Scene& scene, int points, std::uint64_t seed) {
  if (points < 1) throw Error("geometry_features needs at least one point per object");
  const int n = scene.size();
  const std::vector<TriMesh> posed = posed_meshes_lenient(scene);
  std::vector<geom::SurfaceSample> samples(n);
  for (int i = 0; i < n; ++i) samples[i] = geom::sample_surface(posed[i], points, seed + static_cast<std::uint64_t>(i));

  GeometryFeatures f;
  f.objects = n;
  f.points = points;
  f.data.resize(static_cast<long>(n) * points, 4);
  for (int i = 0; i < n; ++i) {
    std::vector<geom::SurfaceSample> others;
    others.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(samples[j]);
    }
    const std::vector<double> d = geom::signed_chamfer(samples[i], geom::merge_samples(others));
    for (int k = 0; k < points; ++k) {
      const long row = static_cast<long>(i) * points + k;
      f.data.block<1, 3>(row, 0) = samples[i].points[k].transpose();
      f.data(row, 3) = d[k];
    }
  }
  return f;
}

AnalyticScoreDenoiser::AnalyticScoreDenoiser(NoiseSchedule schedule, Matrix mean, double variance)
    : schedule_(std::move(schedule)), mean_(std::move(mean)), variance_(variance) {
  if (!mean_.allFinite() || !std::isfinite(variance_) || variance_ <= 0.0) {
    throw Error("analytic denoiser needs a finite mean and a positive variance");
  }
  if (mean_.cols() != kStateWidth) throw ShapeMismatch("analytic denoiser mean must have 9 columns");
}

Matrix AnalyticScoreDenoiser::predict_eps(const DenoiserInput& in) const {
  if (in.x_t.rows() != mean_.rows() || in.x_t.cols() != mean_.cols()) {
    throw ShapeMismatch("state does not match the analytic target");
  }
  const double ab = schedule_.alpha_bar(in.t);
  return (std::sqrt(1.0 - ab) / (ab * variance_ + 1.0 - ab)) * (in.x_t - std::sqrt(ab) * mean_);
}

}  // namespace scenediff
