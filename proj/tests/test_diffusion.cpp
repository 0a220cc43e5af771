#include "doctest.h"

#include <cmath>

#include "gen.hpp"
#include "scenediff/denoiser.hpp"
#include "scenediff/errors.hpp"
#include "scenediff/reference.hpp"
#include "scenediff/sampler.hpp"
#include "scenediff/schedule.hpp"

using namespace scenediff;

namespace {

class ZeroDenoiser : public Denoiser {
 public:
  explicit ZeroDenoiser(int steps) : steps_(steps) {}
  Matrix predict_eps(const DenoiserInput& in) const override { return Matrix::Zero(in.x_t.rows(), in.x_t.cols()); }
  int steps() const override { return steps_; }

 private:
  int steps_;
};

Matrix normal_matrix(gen::Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = gen::normal(rng);
  }
  return m;
}

// Exact noise prediction for an axis-aligned Gaussian target.
class DiagonalScoreDenoiser : public Denoiser {
 public:
  DiagonalScoreDenoiser(NoiseSchedule s, Matrix mean, Matrix var)
      : s_(std::move(s)), mean_(std::move(mean)), var_(std::move(var)) {}
  Matrix predict_eps(const DenoiserInput& in) const override {
    const double ab = s_.alpha_bar(in.t);
    return (std::sqrt(1.0 - ab) * (in.x_t - std::sqrt(ab) * mean_).array() / (ab * var_.array() + 1.0 - ab)).matrix();
  }
  int steps() const override { return s_.steps; }

 private:
  NoiseSchedule s_;
  Matrix mean_, var_;
};

Scene overlapping_cubes() {
  auto cube = gen::box({1, 1, 1});
  Scene s;
  s.objects = {gen::object(0, cube, {0, 0.505, 0}), gen::object(1, cube, {0.7, 0.505, 0.1})};
  s.graphs = RelationGraphs(2);
  return s;
}

}  // namespace

TEST_CASE("cosine schedule identities") {
  const NoiseSchedule s = make_schedule(1000);
  REQUIRE(s.steps == 1000);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) > 0.999);
  double prod = 1.0;
  for (int t = 1; t <= s.steps; ++t) {
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.beta(t) > 0);
    CHECK(s.beta(t) <= kMaxBeta);
    prod *= 1.0 - s.beta(t);
    CHECK(std::abs(prod - s.alpha_bar(t)) < 1e-12);
    CHECK(s.posterior_variance(t) <= s.beta(t));
  }
  CHECK(s.alpha_bar(1000) < 1e-6);
  CHECK_THROWS_AS(make_schedule(1), Error);
  CHECK(parse_schedule_kind("squaredcos_cap_v2") == ScheduleKind::squared_cosine);
  CHECK_THROWS_AS(parse_schedule_kind("linear"), ConfigError);
}

TEST_CASE("forward process") {
  gen::Rng rng(1);
  const Matrix x0 = normal_matrix(rng, 3, 9), y0 = normal_matrix(rng, 3, 9), eps = normal_matrix(rng, 3, 9);

  NoiseSchedule clean = make_schedule(10);
  clean.betas[0] = 0.0;
  clean.alphas[0] = 1.0;
  clean.alpha_bars[0] = 1.0;
  CHECK(forward_sample(x0, 1, eps, clean) == x0);

  const NoiseSchedule s = make_schedule(1000);
  const double a = std::sqrt(s.alpha_bar(400));
  const Matrix lin = forward_sample(2.0 * x0 + y0, 400, eps, s) - forward_sample(y0, 400, eps, s);
  CHECK((lin - 2.0 * a * x0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(forward_sample(x0, 0, eps, s), Error);
  CHECK_THROWS_AS(forward_sample(x0, 3, normal_matrix(rng, 2, 9), s), ShapeMismatch);
}

TEST_CASE("forward process at T is standard normal") {
  gen::Rng rng(2);
  const NoiseSchedule s = make_schedule(1000);
  const Matrix x0 = Matrix::Constant(1, 9, 0.7);
  const int draws = 10000;
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(9), sq = Eigen::ArrayXd::Zero(9);
  for (int k = 0; k < draws; ++k) {
    const Eigen::ArrayXd x = forward_sample(x0, 1000, normal_matrix(rng, 1, 9), s).row(0).transpose().array();
    sum += x;
    sq += x * x;
  }
  const Eigen::ArrayXd mean = sum / draws;
  const Eigen::ArrayXd var = sq / draws - mean * mean;
  for (int k = 0; k < 9; ++k) {
    CHECK(std::abs(mean[k]) < 5.0 / std::sqrt(draws));
    CHECK(std::abs(var[k] - 1.0) < 5.0 * std::sqrt(2.0 / draws));
  }
}

TEST_CASE("reverse step matches the element-wise reference bitwise") {
  gen::Rng rng(3);
  const Scene tmpl = overlapping_cubes();
  for (double clip : {0.0, 1.0}) {
    SamplerConfig cfg;
    cfg.clip_x0 = clip;
    cfg.guided = false;
    for (int t : {1, 2, 50, 199, 200, 500, 999, 1000}) {
      const Matrix x = 2.0 * normal_matrix(rng, 2, 9), eps = normal_matrix(rng, 2, 9), z = normal_matrix(rng, 2, 9);
      const Matrix ours = reverse_step(x, t, eps, z, tmpl, cfg);
      REQUIRE(ours == reference::ddpm_step(x, t, eps, cfg.schedule, z, clip));
    }
  }
}

TEST_CASE("zero guidance weights leave the step unchanged bitwise") {
  gen::Rng rng(4);
  const Scene tmpl = overlapping_cubes();
  SamplerConfig off;
  off.guided = false;
  SamplerConfig zero;
  zero.guidance_scale = 3e4;
  zero.guidance.lambda_c = zero.guidance.lambda_h = zero.guidance.lambda_r = 0.0;
  SamplerConfig on;
  on.guidance_scale = 3e4;
  const Matrix x = normalize_state(flatten_scene(tmpl), 4.0);
  const Matrix eps = normal_matrix(rng, 2, 9), z = normal_matrix(rng, 2, 9);
  StepInfo info;
  CHECK(reverse_step(x, 100, eps, z, tmpl, zero, &info) == reverse_step(x, 100, eps, z, tmpl, off));
  CHECK_FALSE(info.guided);
  CHECK_FALSE(reverse_step(x, 100, eps, z, tmpl, on, &info) == reverse_step(x, 100, eps, z, tmpl, off));
  CHECK(info.guided);
  CHECK(info.g_c > 0);
  CHECK(info.shift_norm > 0);
  // Outside the guidance window the step is untouched.
  CHECK(reverse_step(x, 200, eps, z, tmpl, on) == reverse_step(x, 200, eps, z, tmpl, off));
}

TEST_CASE("one guided step with a zero-noise prediction reduces collision energy") {
  const Scene tmpl = overlapping_cubes();
  const Matrix x = normalize_state(flatten_scene(tmpl), 4.0);
  const Matrix eps = Matrix::Zero(2, 9), z = Matrix::Zero(2, 9);
  SamplerConfig guided;
  guided.guidance_scale = 3e4;
  guided.clip_x0 = 0.0;
  guided.guidance.lambda_h = guided.guidance.lambda_r = 0.0;
  SamplerConfig plain = guided;
  plain.guided = false;
  auto energy = [&](const Matrix& m) { return collision_energy(unflatten(denormalize_state(m, 4.0), tmpl)); };
  const double before = collision_energy(tmpl);
  const double with = energy(reverse_step(x, 150, eps, z, tmpl, guided));
  const double without = energy(reverse_step(x, 150, eps, z, tmpl, plain));
  CHECK(before > 0);
  CHECK(with < before);
  CHECK(with < without);
}

TEST_CASE("reverse step errors") {
  const Scene tmpl = overlapping_cubes();
  SamplerConfig cfg;
  const Matrix x = Matrix::Zero(2, 9);
  CHECK_THROWS_AS(reverse_step(x, 10, Matrix::Zero(3, 9), x, tmpl, cfg), ShapeMismatch);
  CHECK_THROWS_AS(reverse_step(x, 0, x, x, tmpl, cfg), Error);
  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(reverse_step(x, 10, bad, x, tmpl, cfg), NonFiniteState);
  cfg.geometry_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  SamplerConfig mismatch;
  CHECK_THROWS_AS(sample_scene(tmpl, ZeroDenoiser(50), mismatch), ConfigError);
}

TEST_CASE("analytic denoiser closed form") {
  const NoiseSchedule s = make_schedule(1000);
  gen::Rng rng(5);
  const Matrix x = normal_matrix(rng, 2, 9);
  const Scene tmpl = overlapping_cubes();
  AnalyticScoreDenoiser unit(s, Matrix::Zero(2, 9), 1.0);
  for (int t : {1, 300, 1000}) {
    const Matrix e = unit.predict_eps({x, t, tmpl, nullptr});
    CHECK((e - std::sqrt(1.0 - s.alpha_bar(t)) * x).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("analytic sampler recovers the target distribution") {
  const NoiseSchedule s = make_schedule(1000);
  gen::Rng rng(6);
  Matrix mu(2, 9);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 9; ++j) mu(i, j) = gen::uniform(rng, -0.6, 0.6);
  }
  const double var = 0.05;
  AnalyticScoreDenoiser den(s, mu, var);
  const Scene tmpl = overlapping_cubes();
  SamplerConfig cfg;
  cfg.guided = false;
  cfg.clip_x0 = 0.0;
  const int chains = 256;
  Matrix sum = Matrix::Zero(2, 9), sq = Matrix::Zero(2, 9);
  for (int c = 0; c < chains; ++c) {
    cfg.seed = 500 + c;
    const Matrix x = sample_scene(tmpl, den, cfg).state;
    sum += x;
    sq += x.cwiseProduct(x);
  }
  const Matrix mean = sum / chains;
  const double pooled = (sq / chains - mean.cwiseProduct(mean)).mean();
  CHECK((mean - mu).cwiseAbs().maxCoeff() < 0.05);
  CHECK(std::abs(pooled - var) < 0.1 * var);
}

TEST_CASE("sampling is deterministic and guidance only changes the late trace") {
  const NoiseSchedule s = make_schedule(1000);
  const Scene tmpl = overlapping_cubes();
  AnalyticScoreDenoiser den(s, normalize_state(flatten_scene(tmpl), 4.0), 0.001);
  SamplerConfig guided;
  guided.seed = 77;
  guided.guidance_scale = 3e4;
  SamplerConfig plain = guided;
  plain.guided = false;

  const SampleResult a = sample_scene(tmpl, den, guided);
  const SampleResult b = sample_scene(tmpl, den, guided);
  const SampleResult u = sample_scene(tmpl, den, plain);
  CHECK(a.state == b.state);
  REQUIRE(a.trace.size() == 1000);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    const int t = a.trace[k].t;
    REQUIRE(t == 1000 - static_cast<int>(k));
    if (t >= guided.guidance.start_t) {
      REQUIRE(a.trace[k].state_sum == u.trace[k].state_sum);
      REQUIRE_FALSE(a.trace[k].step.guided);
    } else {
      REQUIRE(a.trace[k].step.guided);
    }
  }
  CHECK(a.trace.back().state_sum != u.trace.back().state_sum);
  for (const SceneObject& o : a.scene.objects) CHECK(orthonormality_error(rot6d_to_matrix(o.rotation)) < 1e-12);
}

TEST_CASE("gravity guidance brings a lone object within tolerance of the floor") {
  // Exact score of a Gaussian centred on the resting pose, tight except in
  // height, so unguided samples scatter into and above the floor.
  const NoiseSchedule s = make_schedule(1000);
  const GuidanceConfig g;
  Scene tmpl;
  tmpl.objects = {gen::object(0, gen::box({0.6, 0.6, 0.6}), {0, 0.3 + g.eps_gap, 0})};
  tmpl.graphs = RelationGraphs(1);
  Matrix var = Matrix::Constant(1, kStateWidth, 1e-4);
  var(0, 1) = 3e-4;
  const DiagonalScoreDenoiser den(s, normalize_state(flatten_scene(tmpl), 4.0), var);
  SamplerConfig cfg;
  int unguided_outside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    cfg.guided = false;
    const double free = posed_mesh(sample_scene(tmpl, den, cfg).scene.objects[0]).bounds().lo.y();
    unguided_outside += std::abs(free - g.eps_gap) > g.theta_h;
    cfg.guided = true;
    const double held = posed_mesh(sample_scene(tmpl, den, cfg).scene.objects[0]).bounds().lo.y();
    CHECK(std::abs(held - g.eps_gap) <= g.theta_h);
  }
  CHECK(unguided_outside >= 4);
}
