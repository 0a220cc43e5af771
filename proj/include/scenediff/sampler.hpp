#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "scenediff/denoiser.hpp"
#include "scenediff/guidance.hpp"
#include "scenediff/schedule.hpp"

namespace scenediff {

struct SamplerConfig {
  NoiseSchedule schedule = make_schedule(1000);
  GuidanceConfig guidance;
  bool guided = true;
  double guidance_scale = 3e4;  // global multiplier on the composite gradient
  double position_scale = 4.0;  // positions are divided by this before noising
  int geometry_every = 10;      // recompute geometry features every K steps
  double clip_x0 = 1.0;         // clip the x_0 estimate to [-c, c]; 0 disables
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  /// True when step t receives a guidance shift.
  bool guidance_active(int t) const;
};

/// Positions divided by `scale`; rotation columns untouched.
Matrix normalize_state(const Matrix& x, double scale);
Matrix denormalize_state(const Matrix& x, double scale);

struct StepInfo {
  bool guided = false;
  double g_c = 0.0;
  double g_h = 0.0;
  double g_r = 0.0;
  double shift_norm = 0.0;  // norm of the guidance mean shift
};

/// One reverse step in normalized coordinates: DDPM posterior mean from
/// eps_hat (through the clipped x_0 estimate when clip_x0 > 0), minus sigma_t^2 gamma grad G (chain rule through the position
/// scaling) while guidance is active, plus sigma_t z for t > 1.
/// Throws NonFiniteState.
Matrix reverse_step(const Matrix& x_t, int t, const Matrix& eps_hat, const Matrix& z, const Scene& scene_template,
                    const SamplerConfig& cfg, StepInfo* info = nullptr);

struct TraceEntry {
  int t = 0;
  double state_sum = 0.0;  // sum of x_{t-1}; compares chains cheaply
  StepInfo step;
};

struct SampleResult {
  Scene scene;
  Matrix state;                   // normalized x_0 before rotation cleanup
  std::vector<TraceEntry> trace;  // one entry per step, t = T down to 1
};

/// x_T ~ N(0, I) then T reverse steps; the result is unflattened into the
/// template with rotations re-orthonormalized. The noise stream is consumed
/// identically with and without guidance.
SampleResult sample_scene(const Scene& scene_template, const Denoiser& denoiser, const SamplerConfig& cfg);

}  // namespace scenediff
