#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "scenediff/scene.hpp"

namespace scenediff {

inline constexpr int kSceneFormatVersion = 1;

/// {version, floor_height, objects: [{id, category, mesh: {vertices, faces},
/// position, rotation6d}], spatial: [[label]], physical: [[label]]}.
nlohmann::json scene_to_json(const Scene& scene);
/// Shape descriptors are recomputed from the meshes. Throws Error on schema
/// violations, UnknownLabel on bad labels, and validates the scene.
Scene scene_from_json(const nlohmann::json& j);

/// Throws IoError when the file cannot be written or read or is not JSON.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

/// Posed meshes as Wavefront OBJ, one named group per object.
void write_obj(const std::filesystem::path& path, const Scene& scene);

}  // namespace scenediff
