#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenediff/scene.hpp"

namespace scenediff {

/// Closed primitive meshes centred on their bounding box, outward winding.
TriMesh make_box(const Vec3& size);
TriMesh make_cylinder(double radius, double height, int segments = 16);
/// Table top plus four square legs, one mesh.
TriMesh make_table(const Vec3& size, double top_thickness, double leg_width);

struct GenSpec {
  int min_objects = 2;
  int max_objects = 12;
  double room_x = 6.0;  // floor extent along X, centred on the origin
  double room_z = 6.0;
  double stack_probability = 0.5;
  int max_depth = 3;       // floor objects have depth 1
  double gap = 0.005;      // clearance to the supporting surface
  double clearance = 0.05; // minimum XZ spacing between unrelated objects
  int max_rejections = 1000;

  void validate() const;
};

nlohmann::json gen_spec_to_json(const GenSpec& spec);

/// Physically resting scene: floor objects without overlap, small objects
/// stacked inside their supporter's top with the configured gap. Physical
/// relations come from construction, spatial ones from derive_relations.
/// Placements whose spatial labels sit near a labeling threshold are
/// rejected so the annotations are stable under small perturbations.
/// Throws PlacementFailure after max_rejections failed placements.
Scene gen_scene(const GenSpec& spec, std::uint64_t seed);

/// Per-scene seeds derived from a master seed.
std::uint64_t scene_seed(std::uint64_t master, std::uint64_t index);

struct DatasetManifest {
  std::vector<std::string> train;  // paths relative to the manifest
  std::vector<std::string> test;
  std::vector<std::uint64_t> seeds;
};

/// Writes train/ and test/ scene files plus manifest.json under out_dir;
/// the first round(count * split_ratio) seeds form the training split.
/// Throws Error for count < 2, IoError on write failures.
DatasetManifest gen_dataset(const GenSpec& spec, int count, double split_ratio, std::uint64_t seed,
                            const std::filesystem::path& out_dir);

/// Loads every scene of one split ("train" or "test") listed in a manifest.
std::vector<Scene> load_split(const std::filesystem::path& manifest_path, const std::string& split);

}  // namespace scenediff
