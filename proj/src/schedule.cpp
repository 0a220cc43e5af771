#include "scenediff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "scenediff/errors.hpp"

namespace scenediff {

double NoiseSchedule::posterior_variance(int t) const {
  return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
  if (steps < 2) throw Error("schedule needs at least 2 steps, got " + std::to_string(steps));
  NoiseSchedule s;
  s.steps = steps;
  s.kind = kind;
  auto f = [&](double t) {
    const double c = std::cos((t / steps + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  double prod = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double beta = std::min(1.0 - (f(t) / f0) / (f(t - 1) / f0), kMaxBeta);
    prod *= 1.0 - beta;
    s.betas.push_back(beta);
    s.alphas.push_back(1.0 - beta);
    s.alpha_bars.push_back(prod);
  }
  return s;
}

ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "squared_cosine" || s == "squaredcos_cap_v2") return ScheduleKind::squared_cosine;
  throw ConfigError("unknown schedule kind '" + std::string(s) + "'");
}

Matrix forward_sample(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps) throw Error("timestep out of range: " + std::to_string(t));
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) throw ShapeMismatch("noise shape differs from x0");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

}  // namespace scenediff
