#include "scenediff/scene.hpp"

#include <array>
#include <string>

#include "scenediff/errors.hpp"

namespace scenediff {

namespace {
constexpr std::array<std::string_view, kSpatialLabelCount> kSpatialNames = {
    "none", "left_of", "right_of", "in_front_of", "behind", "above", "below"};
constexpr std::array<std::string_view, kPhysicalLabelCount> kPhysicalNames = {
    "none", "support", "contact", "attach"};
}  // namespace

std::string_view to_string(SpatialRel r) { return kSpatialNames[static_cast<int>(r)]; }
std::string_view to_string(PhysicalRel r) { return kPhysicalNames[static_cast<int>(r)]; }

SpatialRel parse_spatial(std::string_view s) {
  for (int i = 0; i < kSpatialLabelCount; ++i) {
    if (kSpatialNames[i] == s) return static_cast<SpatialRel>(i);
  }
  throw UnknownLabel("unknown spatial label '" + std::string(s) + "'");
}

PhysicalRel parse_physical(std::string_view s) {
  for (int i = 0; i < kPhysicalLabelCount; ++i) {
    if (kPhysicalNames[i] == s) return static_cast<PhysicalRel>(i);
  }
  throw UnknownLabel("unknown physical label '" + std::string(s) + "'");
}

SpatialRel opposite(SpatialRel r) {
  switch (r) {
    case SpatialRel::left_of: return SpatialRel::right_of;
    case SpatialRel::right_of: return SpatialRel::left_of;
    case SpatialRel::in_front_of: return SpatialRel::behind;
    case SpatialRel::behind: return SpatialRel::in_front_of;
    case SpatialRel::above: return SpatialRel::below;
    case SpatialRel::below: return SpatialRel::above;
    case SpatialRel::none: return SpatialRel::none;
  }
  return SpatialRel::none;
}

int RelationGraphs::supporter_of(int i) const {
  for (int j = 0; j < size(); ++j) {
    if (physical(i, j) == PhysicalRel::support) return j;
  }
  return -1;
}

void RelationGraphs::validate() const {
  const int n = size();
  if (physical.size() != n) throw GraphSizeMismatch("spatial and physical graph sizes differ");
  for (int i = 0; i < n; ++i) {
    if (spatial(i, i) != SpatialRel::none || physical(i, i) != PhysicalRel::none) {
      throw Error("relation graph diagonal must be none (object " + std::to_string(i) + ")");
    }
    for (int j = 0; j < n; ++j) {
      if (spatial(j, i) != opposite(spatial(i, j))) {
        throw Error("spatial relation " + std::to_string(i) + "->" + std::to_string(j) +
                    " is not mirrored by its opposite");
      }
    }
  }
  // Support must be acyclic: follow support edges with a DFS colouring.
  std::vector<int> state(n, 0);
  auto visit = [&](auto&& self, int u) -> void {
    state[u] = 1;
    for (int v = 0; v < n; ++v) {
      if (physical(u, v) != PhysicalRel::support) continue;
      if (state[v] == 1) throw Error("support edges form a cycle through object " + std::to_string(v));
      if (state[v] == 0) self(self, v);
    }
    state[u] = 2;
  };
  for (int i = 0; i < n; ++i) {
    if (state[i] == 0) visit(visit, i);
  }
}

void Scene::validate() const {
  if (objects.empty()) throw Error("scene has no objects");
  for (int i = 0; i < size(); ++i) {
    if (objects[i].id != i) throw Error("object ids must be dense and ordered; found id " +
                                        std::to_string(objects[i].id) + " at index " + std::to_string(i));
    if (!objects[i].mesh) throw EmptyMesh("object " + std::to_string(i) + " has no mesh");
  }
  if (graphs.size() != size()) {
    throw GraphSizeMismatch("graphs are " + std::to_string(graphs.size()) + "x" +
                            std::to_string(graphs.size()) + " for " + std::to_string(size()) + " objects");
  }
  graphs.validate();
}

Matrix flatten_scene(const Scene& scene) {
  Matrix x(scene.size(), kStateWidth);
  for (int i = 0; i < scene.size(); ++i) {
    const SceneObject& o = scene.objects[i];
    x.row(i).head<3>() = o.position.transpose();
    x.row(i).tail<6>() = o.rotation.transpose();
  }
  return x;
}

Scene unflatten(const Matrix& x, const Scene& scene_template) {
  if (x.rows() != scene_template.size() || x.cols() != kStateWidth) {
    throw ShapeMismatch("state is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                        ", template has " + std::to_string(scene_template.size()) + " objects");
  }
  if (!x.allFinite()) throw NonFiniteState("state vector contains non-finite entries");
  Scene out = scene_template;
  for (int i = 0; i < out.size(); ++i) {
    out.objects[i].position = x.row(i).head<3>().transpose();
    out.objects[i].rotation = x.row(i).tail<6>().transpose();
  }
  return out;
}

TriMesh posed_mesh(const SceneObject& obj) {
  return obj.mesh->transformed(rot6d_to_matrix(obj.rotation), obj.position);
}

TriMesh posed_mesh_lenient(const SceneObject& obj) {
  return obj.mesh->transformed(rot6d_to_matrix_or_identity(obj.rotation), obj.position);
}

std::vector<TriMesh> posed_meshes_lenient(const Scene& scene) {
  std::vector<TriMesh> out(scene.objects.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < scene.size(); ++i) out[i] = posed_mesh_lenient(scene.objects[i]);
  return out;
}

}  // namespace scenediff
