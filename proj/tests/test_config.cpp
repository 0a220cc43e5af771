#include "doctest.h"

#include <string>

#include "scenediff/config.hpp"
#include "scenediff/errors.hpp"

using namespace scenediff;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.seed == 0);
  CHECK(c.sampler.schedule.steps == 1000);
  CHECK(c.sampler.guidance.lambda_c == 7.5e-3);
  CHECK(c.sampler.guidance.lambda_h == 1e-3);
  CHECK(c.sampler.guidance.grad_mode == GradMode::analytic);
  CHECK(c.metrics.penetration_threshold == 0.01);
  CHECK(c.split_ratio == 0.8);
}

TEST_CASE("values land in their fields") {
  const RunConfig c = parse_config(
      "[run]\nseed = 7\noutput_dir = results\n"
      "[gen]\nmax_objects = 5\nsplit_ratio = 0.5\n"
      "[train]\nsteps = 20\nd = 16\ndiffusion_steps = 50\n"
      "[sampler]\nsteps = 50\nguided = false\nguidance_scale = 2.5\n"
      "[guidance]\nlambda_r = 0.25\ngrad_mode = finite_difference\nstart_t = 10\n"
      "[metrics]\nstability_runs = 3\n");
  CHECK(c.seed == 7);
  CHECK(c.output_dir == "results");
  CHECK(c.gen.max_objects == 5);
  CHECK(c.split_ratio == 0.5);
  CHECK(c.train.steps == 20);
  CHECK(c.train.d == 16);
  CHECK(c.sampler.schedule.steps == 50);
  CHECK_FALSE(c.sampler.guided);
  CHECK(c.sampler.guidance_scale == 2.5);
  CHECK(c.sampler.guidance.lambda_r == 0.25);
  CHECK(c.sampler.guidance.grad_mode == GradMode::finite_difference);
  CHECK(c.sampler.guidance.start_t == 10);
  CHECK(c.metrics.stability_runs == 3);
}

TEST_CASE("section seeds inherit the run seed unless set") {
  const RunConfig a = parse_config("[run]\nseed = 42\n");
  CHECK(a.train.seed == 42);
  CHECK(a.sampler.seed == 42);
  CHECK(a.metrics.seed == 42);
  const RunConfig b = parse_config("[run]\nseed = 42\n[sampler]\nseed = 3\n");
  CHECK(b.train.seed == 42);
  CHECK(b.sampler.seed == 3);
  CHECK(b.metrics.seed == 42);
}

TEST_CASE("unknown keys and sections are named in the error") {
  CHECK(error_of("[train]\nlearning_rate = 1\n").find("train.learning_rate") != std::string::npos);
  CHECK(error_of("[optimizer]\nlr = 1\n").find("optimizer") != std::string::npos);
  CHECK(error_of("seed = 1\n").find("seed") != std::string::npos);
}

TEST_CASE("malformed and out-of-range values are rejected") {
  CHECK(error_of("[run]\nseed = -1\n").find("run.seed") != std::string::npos);
  CHECK(error_of("[train]\nlr = fast\n").find("train.lr") != std::string::npos);
  CHECK(error_of("[train]\nsteps = 2.5\n").find("train.steps") != std::string::npos);
  CHECK(error_of("[sampler]\nguided = maybe\n").find("sampler.guided") != std::string::npos);
  CHECK(error_of("[guidance]\ngrad_mode = symbolic\n").find("guidance.grad_mode") != std::string::npos);
  CHECK_FALSE(error_of("[guidance]\nlambda_c = -1\n").empty());
  CHECK_FALSE(error_of("[gen]\nsplit_ratio = 1.5\n").empty());
  CHECK_FALSE(error_of("[sampler]\nsteps = 50\n").empty());  // disagrees with train.diffusion_steps
  CHECK_FALSE(error_of("[metrics]\nstability_runs = 0\n").empty());
  CHECK_FALSE(error_of("[run\nseed = 1\n").empty());
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config("/nonexistent/scenediff.ini"), IoError);
}
