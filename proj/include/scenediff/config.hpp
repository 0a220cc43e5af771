#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scenediff/graph_denoiser.hpp"
#include "scenediff/metrics.hpp"
#include "scenediff/sampler.hpp"
#include "scenediff/synth.hpp"

namespace scenediff {

/// Everything a CLI run needs. Sections of the INI file:
///   [run] seed, output_dir
///   [gen] GenSpec fields plus split_ratio
///   [train] TrainConfig fields
///   [sampler] steps, guided, guidance_scale, position_scale, geometry_every,
///             clip_x0, seed
///   [guidance] GuidanceConfig fields (grad_mode = analytic | finite_difference)
///   [metrics] MetricOptions fields
/// A section seed left unset inherits [run] seed.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  GenSpec gen;
  double split_ratio = 0.8;
  TrainConfig train;
  SamplerConfig sampler;
  MetricOptions metrics;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown sections or keys and malformed or out-of-range
/// values throw ConfigError naming the offending key.
RunConfig parse_config(const std::string& text);
/// Throws IoError when unreadable, ConfigError otherwise.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace scenediff
