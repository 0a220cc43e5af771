#include "scenediff/sampler.hpp"

#include <cmath>
#include <string>

#include "scenediff/errors.hpp"
#include "scenediff/log.hpp"

namespace scenediff {

void SamplerConfig::validate() const {
  if (schedule.steps < 2) throw ConfigError("sampler.steps must be at least 2");
  guidance.validate(schedule.steps);
  if (!(guidance_scale >= 0.0) || !std::isfinite(guidance_scale)) {
    throw ConfigError("sampler.guidance_scale must be finite and non-negative");
  }
  if (!(position_scale > 0.0) || !std::isfinite(position_scale)) {
    throw ConfigError("sampler.position_scale must be positive");
  }
  if (geometry_every < 1) throw ConfigError("sampler.geometry_every must be at least 1");
  if (!(clip_x0 >= 0.0) || !std::isfinite(clip_x0)) throw ConfigError("sampler.clip_x0 must be finite and non-negative");
}

bool SamplerConfig::guidance_active(int t) const {
  if (!guided || guidance_scale == 0.0 || t >= guidance.start_t) return false;
  return guidance.lambda_c != 0.0 || guidance.lambda_h != 0.0 || guidance.lambda_r != 0.0;
}

Matrix normalize_state(const Matrix& x, double scale) {
  Matrix r = x;
  r.leftCols(3) /= scale;
  return r;
}

Matrix denormalize_state(const Matrix& x, double scale) {
  Matrix r = x;
  r.leftCols(3) *= scale;
  return r;
}

Matrix reverse_step(const Matrix& x_t, int t, const Matrix& eps_hat, const Matrix& z, const Scene& scene_template,
                    const SamplerConfig& cfg, StepInfo* info) {
  const NoiseSchedule& s = cfg.schedule;
  if (t < 1 || t > s.steps) throw Error("reverse_step: t out of range");
  if (eps_hat.rows() != x_t.rows() || eps_hat.cols() != x_t.cols()) {
    throw ShapeMismatch("denoiser output does not match the state shape");
  }
  if (!x_t.allFinite() || !eps_hat.allFinite()) {
    throw NonFiniteState("non-finite state or noise estimate entering step t = " + std::to_string(t));
  }
  const double beta = s.beta(t);
  const double ab = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar(t - 1);
  Matrix mean;
  if (cfg.clip_x0 > 0.0) {
    const Matrix x0 =
        ((x_t.array() - std::sqrt(1.0 - ab) * eps_hat.array()) / std::sqrt(ab)).max(-cfg.clip_x0).min(cfg.clip_x0).matrix();
    mean = ((std::sqrt(ab_prev) * beta / (1.0 - ab)) * x0.array() +
            (std::sqrt(s.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab)) * x_t.array())
               .matrix();
  } else {
    mean = ((x_t.array() - (beta / std::sqrt(1.0 - ab)) * eps_hat.array()) / std::sqrt(s.alpha(t))).matrix();
  }
  const double var = s.posterior_variance(t);

  if (cfg.guidance_active(t)) {
    const Scene scene = unflatten(denormalize_state(x_t, cfg.position_scale), scene_template);
    const GuidanceReport rep = composite_gradient(scene, cfg.guidance);
    Matrix grad = rep.gradient;
    grad.leftCols(3) *= cfg.position_scale;
    const Matrix shift = (var * cfg.guidance_scale) * grad;
    mean -= shift;
    if (info) {
      info->guided = true;
      info->g_c = rep.g_c;
      info->g_h = rep.g_h;
      info->g_r = rep.g_r;
      info->shift_norm = shift.norm();
    }
  }
  if (t > 1) mean = (mean.array() + std::sqrt(var) * z.array()).matrix();
  if (!mean.allFinite()) {
    throw NonFiniteState("reverse chain produced a non-finite state at t = " + std::to_string(t));
  }
  return mean;
}

namespace {

Matrix normal_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

SampleResult sample_scene(const Scene& scene_template, const Denoiser& denoiser, const SamplerConfig& cfg) {
  cfg.validate();
  if (denoiser.steps() != cfg.schedule.steps) {
    throw ConfigError("denoiser was built for " + std::to_string(denoiser.steps()) + " steps, sampler uses " +
                      std::to_string(cfg.schedule.steps));
  }
  const int n = scene_template.size();
  const int T = cfg.schedule.steps;
  std::mt19937_64 rng(cfg.seed);
  Matrix x = normal_matrix(n, kStateWidth, rng);

  SampleResult out;
  out.trace.reserve(T);
  GeometryFeatures geo;
  const int points = denoiser.geometry_points();
  int since_geometry = cfg.geometry_every;
  for (int t = T; t >= 1; --t) {
    if (points > 0 && since_geometry >= cfg.geometry_every) {
      const Scene current = unflatten(denormalize_state(x, cfg.position_scale), scene_template);
      geo = geometry_features(current, points, cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t)));
      since_geometry = 0;
    }
    ++since_geometry;
    const Matrix eps = denoiser.predict_eps({x, t, scene_template, points > 0 ? &geo : nullptr});
    const Matrix z = t > 1 ? normal_matrix(n, kStateWidth, rng) : Matrix::Zero(n, kStateWidth);
    TraceEntry e;
    e.t = t;
    x = reverse_step(x, t, eps, z, scene_template, cfg, &e.step);
    e.state_sum = x.sum();
    out.trace.push_back(e);
  }

  out.state = x;
  Matrix final_state = denormalize_state(x, cfg.position_scale);
  for (int i = 0; i < n; ++i) {
    const Rot6 r6 = final_state.block<1, 6>(i, 3).transpose();
    final_state.block<1, 6>(i, 3) = matrix_to_rot6d(rot6d_to_matrix_or_identity(r6)).transpose();
  }
  out.scene = unflatten(final_state, scene_template);
  log_info("sampled scene with " + std::to_string(n) + " objects");
  return out;
}

}  // namespace scenediff
