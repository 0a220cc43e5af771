#include "scenediff/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "scenediff/errors.hpp"

namespace scenediff {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + s + "'");
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

template <class T>
Setter num(T& field) {
  return [&field](const std::string& k, const std::string& v) { field = parse_number<T>(k, v); };
}

Setter flag(bool& field) {
  return [&field](const std::string& k, const std::string& v) { field = parse_bool(k, v); };
}

}  // namespace

void RunConfig::validate() const {
  gen.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("gen.split_ratio must lie in (0, 1)");
  train.validate();
  sampler.validate();
  if (train.diffusion_steps != sampler.schedule.steps) {
    throw ConfigError("train.diffusion_steps and sampler.steps must agree");
  }
  if (metrics.penetration_threshold <= 0.0) throw ConfigError("metrics.penetration_threshold must be positive");
  if (metrics.penetration_samples < 1) throw ConfigError("metrics.penetration_samples must be positive");
  if (metrics.stability_runs < 1) throw ConfigError("metrics.stability_runs must be positive");
  if (metrics.jitter_sigma < 0.0) throw ConfigError("metrics.jitter_sigma must be non-negative");
  if (metrics.settle_max_iters < 1) throw ConfigError("metrics.settle_max_iters must be positive");
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  RunConfig c;
  int steps = c.sampler.schedule.steps;
  std::string grad_mode = "analytic";
  std::string output_dir = c.output_dir.string();
  bool train_seed = false, sampler_seed = false, metrics_seed = false;
  std::map<std::string, std::map<std::string, Setter>> table;
  table["run"] = {
      {"seed", num(c.seed)},
      {"output_dir", [&](const std::string&, const std::string& v) { output_dir = trim(v); }},
  };
  table["gen"] = {
      {"min_objects", num(c.gen.min_objects)},
      {"max_objects", num(c.gen.max_objects)},
      {"room_x", num(c.gen.room_x)},
      {"room_z", num(c.gen.room_z)},
      {"stack_probability", num(c.gen.stack_probability)},
      {"max_depth", num(c.gen.max_depth)},
      {"gap", num(c.gen.gap)},
      {"clearance", num(c.gen.clearance)},
      {"max_rejections", num(c.gen.max_rejections)},
      {"split_ratio", num(c.split_ratio)},
  };
  table["train"] = {
      {"lr", num(c.train.lr)},
      {"weight_decay", num(c.train.weight_decay)},
      {"clip_norm", num(c.train.clip_norm)},
      {"batch_size", num(c.train.batch_size)},
      {"steps", num(c.train.steps)},
      {"seed", [&](const std::string& k, const std::string& v) {
         c.train.seed = parse_number<std::uint64_t>(k, v);
         train_seed = true;
       }},
      {"d", num(c.train.d)},
      {"layers", num(c.train.layers)},
      {"heads", num(c.train.heads)},
      {"n_geo", num(c.train.n_geo)},
      {"m_train", num(c.train.m_train)},
      {"diffusion_steps", num(c.train.diffusion_steps)},
      {"position_scale", num(c.train.position_scale)},
  };
  table["sampler"] = {
      {"steps", num(steps)},
      {"guided", flag(c.sampler.guided)},
      {"guidance_scale", num(c.sampler.guidance_scale)},
      {"position_scale", num(c.sampler.position_scale)},
      {"geometry_every", num(c.sampler.geometry_every)},
      {"clip_x0", num(c.sampler.clip_x0)},
      {"seed", [&](const std::string& k, const std::string& v) {
         c.sampler.seed = parse_number<std::uint64_t>(k, v);
         sampler_seed = true;
       }},
  };
  table["guidance"] = {
      {"lambda_c", num(c.sampler.guidance.lambda_c)},
      {"lambda_h", num(c.sampler.guidance.lambda_h)},
      {"lambda_r", num(c.sampler.guidance.lambda_r)},
      {"eps_gap", num(c.sampler.guidance.eps_gap)},
      {"theta_h", num(c.sampler.guidance.theta_h)},
      {"floor_reach", num(c.sampler.guidance.floor_reach)},
      {"start_t", num(c.sampler.guidance.start_t)},
      {"grad_mode", [&](const std::string&, const std::string& v) { grad_mode = trim(v); }},
      {"fd_step", num(c.sampler.guidance.fd_step)},
      {"gap_resolution", num(c.sampler.guidance.gap_resolution)},
  };
  table["metrics"] = {
      {"penetration_threshold", num(c.metrics.penetration_threshold)},
      {"penetration_samples", num(c.metrics.penetration_samples)},
      {"stability_runs", num(c.metrics.stability_runs)},
      {"jitter_sigma", num(c.metrics.jitter_sigma)},
      {"settle_max_iters", num(c.metrics.settle_max_iters)},
      {"seed", [&](const std::string& k, const std::string& v) {
         c.metrics.seed = parse_number<std::uint64_t>(k, v);
         metrics_seed = true;
       }},
  };

  for (const auto& [section, body] : tree) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      if (body.empty()) throw ConfigError("config key '" + section + "' must live inside a section");
      throw ConfigError("unknown config section '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown config key '" + full + "'");
      setter->second(full, value.data());
    }
  }

  c.output_dir = output_dir;
  if (!train_seed) c.train.seed = c.seed;
  if (!sampler_seed) c.sampler.seed = c.seed;
  if (!metrics_seed) c.metrics.seed = c.seed;
  try {
    c.sampler.guidance.grad_mode = parse_grad_mode(grad_mode);
  } catch (const Error&) {
    throw ConfigError("config key 'guidance.grad_mode': unknown mode '" + grad_mode + "'");
  }
  if (steps < 2) throw ConfigError("sampler.steps must be at least 2");
  c.sampler.schedule = make_schedule(steps);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace scenediff
