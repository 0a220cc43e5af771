#pragma once

#include <string_view>
#include <vector>

#include "scenediff/mesh.hpp"

namespace scenediff {

enum class ScheduleKind { squared_cosine };

/// DDPM noise tables. Timesteps are 1-based: beta(t), alpha_bar(t) for
/// t in [1, T], with alpha_bar(0) = 1.
struct NoiseSchedule {
  int steps = 0;
  ScheduleKind kind = ScheduleKind::squared_cosine;
  std::vector<double> betas;       // betas[t - 1]
  std::vector<double> alphas;      // 1 - beta
  std::vector<double> alpha_bars;  // cumulative products

  double beta(int t) const { return betas[t - 1]; }
  double alpha(int t) const { return alphas[t - 1]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
  /// beta~_t = beta_t (1 - abar_{t-1}) / (1 - abar_t).
  double posterior_variance(int t) const;
};

inline constexpr double kCosineOffset = 0.008;
inline constexpr double kMaxBeta = 0.999;

/// squaredcos_cap_v2: abar(t) = f(t) / f(0), f(t) = cos^2(((t/T + s)/(1 + s)) pi/2),
/// betas clipped to kMaxBeta and abar recomputed as their cumulative product.
/// Throws Error for T < 2.
NoiseSchedule make_schedule(int steps, ScheduleKind kind = ScheduleKind::squared_cosine);

ScheduleKind parse_schedule_kind(std::string_view s);

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps, t in [1, T].
Matrix forward_sample(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& schedule);

}  // namespace scenediff
