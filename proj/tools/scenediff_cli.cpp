// scenediff: data generation, training, sampling, evaluation and settling.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scenediff/config.hpp"
#include "scenediff/errors.hpp"
#include "scenediff/graph_denoiser.hpp"
#include "scenediff/log.hpp"
#include "scenediff/metrics.hpp"
#include "scenediff/sampler.hpp"
#include "scenediff/scene_io.hpp"
#include "scenediff/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace scenediff;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kDiverged = 4, kSampler = 5 };

struct Common {
  std::string config;
  int jobs = 1;
  bool verbose = false;
  bool quiet = false;
};

RunConfig load_run_config(const Common& c) { return c.config.empty() ? parse_config("") : load_config(c.config); }

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", stem, i, ext);
  return buf;
}

// A manifest selects one split; a directory yields its scene files in name order.
std::vector<fs::path> scene_paths(const fs::path& source, const std::string& split) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(source)) {
    const nlohmann::json j = read_json(source);
    if (!j.is_object() || !j.contains(split)) throw IoError(source.string() + " has no '" + split + "' split");
    for (const auto& rel : j.at(split)) out.push_back(source.parent_path() / rel.get<std::string>());
    return out;
  }
  if (!fs::is_directory(source)) throw IoError("no such scene source: " + source.string());
  if (fs::is_regular_file(source / "manifest.json")) return scene_paths(source / "manifest.json", split);
  for (const auto& e : fs::directory_iterator(source)) {
    const fs::path& p = e.path();
    if (e.is_regular_file() && p.extension() == ".json" && p.filename().string().rfind("scene_", 0) == 0) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Scene> load_scenes(const std::vector<fs::path>& paths) {
  std::vector<Scene> scenes;
  scenes.reserve(paths.size());
  for (const auto& p : paths) {
    try {
      scenes.push_back(read_scene(p));
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      throw IoError(p.string() + ": " + e.what());
    }
  }
  return scenes;
}

template <class F>
void parallel_for(int count, int jobs, F&& body) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- commands ------------------------------------------------------------------

int cmd_gen_data(const Common& c, int count, const std::string& out) {
  const RunConfig cfg = load_run_config(c);
  gen_dataset(cfg.gen, count, cfg.split_ratio, cfg.seed, out);
  std::cout << (fs::path(out) / "manifest.json").string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::string& data, const std::string& out, const std::string& init) {
  const RunConfig cfg = load_run_config(c);
  const std::vector<Scene> scenes = load_scenes(scene_paths(data, "train"));
  if (scenes.empty()) throw ConfigError("training split is empty");
  GraphDenoiser model(cfg.train);
  if (!init.empty()) load_weights(model, init);
  log_info("training " + std::to_string(model.params().count()) + " parameters on " + std::to_string(scenes.size()) +
           " scenes");
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> losses = train(model, scenes, [&](int step, double loss) {
    if ((step + 1) % 100 == 0) log_info("step " + std::to_string(step + 1) + " loss " + std::to_string(loss));
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out);
  save_checkpoint(model, fs::path(out) / "checkpoint.json");
  std::ofstream csv(fs::path(out) / "loss.csv");
  if (!csv) throw IoError("cannot write " + (fs::path(out) / "loss.csv").string());
  csv << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, losses[i]);
    csv << buf;
  }
  std::printf("final loss %.6f (%d steps, %.1f s)\n", losses.back(), cfg.train.steps, secs);
  return kOk;
}

void write_trace(const fs::path& path, const std::vector<TraceEntry>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,state_sum,guided,g_c,g_h,g_r,shift_norm\n";
  char buf[256];
  for (const TraceEntry& e : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", e.t, e.state_sum, e.step.guided ? 1 : 0,
                  e.step.g_c, e.step.g_h, e.step.g_r, e.step.shift_norm);
    out << buf;
  }
}

int cmd_sample(const Common& c, const std::string& ckpt, bool analytic, double analytic_variance,
               const std::string& templates, const std::string& split, const std::string& out, bool no_guidance) {
  RunConfig cfg = load_run_config(c);
  if (no_guidance) cfg.sampler.guided = false;
  if (ckpt.empty() == !analytic) throw ConfigError("sample needs exactly one of --ckpt or --analytic");
  if (!(analytic_variance > 0.0)) throw ConfigError("--analytic-variance must be positive");
  const std::vector<Scene> tmpl = load_scenes(scene_paths(templates, split));
  std::optional<GraphDenoiser> model;
  if (!analytic) {
    model.emplace(load_checkpoint(ckpt));
    cfg.sampler.position_scale = model->config().position_scale;
  }
  std::vector<SampleResult> results(tmpl.size());
  std::vector<double> seconds(tmpl.size());
  parallel_for(static_cast<int>(tmpl.size()), c.jobs, [&](int i) {
    SamplerConfig sc = cfg.sampler;
    sc.seed = scene_seed(cfg.sampler.seed, static_cast<std::uint64_t>(i));
    const auto t0 = std::chrono::steady_clock::now();
    if (analytic) {
      const Matrix mean = normalize_state(flatten_scene(tmpl[i]), sc.position_scale);
      const AnalyticScoreDenoiser den(sc.schedule, mean, analytic_variance);
      results[i] = sample_scene(tmpl[i], den, sc);
    } else {
      results[i] = sample_scene(tmpl[i], *model, sc);
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  fs::create_directories(out);
  for (std::size_t i = 0; i < results.size(); ++i) {
    write_scene(fs::path(out) / numbered("scene", i, ".json"), results[i].scene);
    write_trace(fs::path(out) / numbered("trace", i, ".csv"), results[i].trace);
    log_info(numbered("scene", i, "") + " sampled in " + std::to_string(seconds[i]) + " s");
  }
  std::printf("sampled %zu scenes into %s\n", results.size(), out.c_str());
  return kOk;
}

int cmd_eval(const Common& c, const std::string& scenes_src, const std::string& truth_src, const std::string& split,
             const std::string& out) {
  const RunConfig cfg = load_run_config(c);
  const std::vector<Scene> scenes = load_scenes(scene_paths(scenes_src, split));
  const std::vector<Scene> truth = load_scenes(scene_paths(truth_src, split));
  if (scenes.size() != truth.size()) {
    throw ConfigError("scene count " + std::to_string(scenes.size()) + " differs from truth count " +
                      std::to_string(truth.size()));
  }
  std::vector<RelationGraphs> graphs;
  for (const Scene& s : truth) graphs.push_back(s.graphs);
  const MetricReport report = evaluate(scenes, graphs, cfg.metrics);
  std::cout << report_table(report);
  for (std::size_t i = 0; i < report.per_scene.size(); ++i) {
    std::printf("scene %zu: %.3f s\n", i, report.per_scene[i].seconds);
  }
  if (!out.empty()) write_json(out, report_to_json(report));
  return kOk;
}

int cmd_simulate(const Common& c, const std::string& scenes_src, const std::string& split, int runs,
                 const std::string& out) {
  RunConfig cfg = load_run_config(c);
  if (runs < 1) throw ConfigError("--runs must be positive");
  cfg.metrics.stability_runs = runs;
  const std::vector<Scene> scenes = load_scenes(scene_paths(scenes_src, split));
  std::vector<Scene> settled(scenes.size());
  std::vector<StabilityResult> stab(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), c.jobs, [&](int i) {
    settled[i] = settle(scenes[i], cfg.metrics.settle_max_iters, cfg.metrics.rules.gap_resolution).scene;
    stab[i] = stability(scenes[i], cfg.metrics);
  });
  fs::create_directories(out);
  nlohmann::json per_scene = nlohmann::json::array();
  double sum = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    write_scene(fs::path(out) / numbered("scene", i, ".json"), settled[i]);
    per_scene.push_back({{"index", i}, {"stability", stab[i].stability}, {"edges", stab[i].edges},
                         {"changed", stab[i].changed}});
    sum += stab[i].stability;
  }
  const double mean = scenes.empty() ? 1.0 : sum / static_cast<double>(scenes.size());
  write_json(fs::path(out) / "stability.json", {{"runs", runs}, {"stability", mean}, {"scenes", per_scene}});
  std::printf("stability %.4f over %zu scenes\n", mean, scenes.size());
  return kOk;
}

int cmd_export_obj(const std::string& scene, const std::string& out) {
  write_obj(out, read_scene(scene));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-guided diffusion for 3D scene layouts"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "INI run configuration");
  app.add_option("-j,--jobs", common.jobs, "parallel scenes or chains")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", common.verbose, "progress messages");
  app.add_flag("-q,--quiet", common.quiet, "errors only");

  int count = 0;
  std::string out, data, init, ckpt, templates, scenes, truth, scene, split = "test";
  bool analytic = false, no_guidance = false;
  double analytic_variance = 0.01;
  int runs = 10;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene corpus");
  gen->add_option("--count", count, "number of scenes")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train the graph denoiser");
  tr->add_option("--data", data, "dataset manifest")->required();
  tr->add_option("--out", out, "output directory")->required();
  tr->add_option("--init", init, "checkpoint to start from");

  auto* sm = app.add_subcommand("sample", "sample layouts for template scenes");
  sm->add_option("--ckpt", ckpt, "denoiser checkpoint");
  sm->add_flag("--analytic", analytic, "closed-form Gaussian denoiser centred on each template");
  sm->add_option("--analytic-variance", analytic_variance, "target variance for --analytic");
  sm->add_option("--templates", templates, "manifest or scene directory")->required();
  sm->add_option("--split", split, "manifest split");
  sm->add_option("--out", out, "output directory")->required();
  sm->add_flag("--no-guidance", no_guidance, "disable guidance");

  auto* ev = app.add_subcommand("eval", "score scenes against ground truth");
  ev->add_option("--scenes", scenes, "manifest or scene directory")->required();
  ev->add_option("--truth", truth, "manifest or scene directory")->required();
  ev->add_option("--split", split, "manifest split");
  ev->add_option("--out", out, "report JSON");

  auto* sim = app.add_subcommand("simulate", "settle scenes and measure stability");
  sim->add_option("--scenes", scenes, "manifest or scene directory")->required();
  sim->add_option("--split", split, "manifest split");
  sim->add_option("--runs", runs, "jittered settling runs per scene");
  sim->add_option("--out", out, "output directory")->required();

  auto* obj = app.add_subcommand("export-obj", "write a posed scene as OBJ");
  obj->add_option("--scene", scene, "scene JSON")->required();
  obj->add_option("--out", out, "OBJ path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  set_log_level(common.quiet ? LogLevel::quiet : common.verbose ? LogLevel::info : LogLevel::warn);

  try {
    if (*gen) return cmd_gen_data(common, count, out);
    if (*tr) return cmd_train(common, data, out, init);
    if (*sm) return cmd_sample(common, ckpt, analytic, analytic_variance, templates, split, out, no_guidance);
    if (*ev) return cmd_eval(common, scenes, truth, split, out);
    if (*sim) return cmd_simulate(common, scenes, split, runs, out);
    if (*obj) return cmd_export_obj(scene, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ShapeMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const DivergedTraining& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const NonFiniteState& e) {
    std::cerr << "sampler failure: " << e.what() << "\n";
    return kSampler;
  } catch (const NonFiniteGradient& e) {
    std::cerr << "sampler failure: " << e.what() << "\n";
    return kSampler;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
