#include "scenediff/scene_io.hpp"

#include <fstream>

#include "scenediff/errors.hpp"
#include "scenediff/shape.hpp"

namespace scenediff {

using nlohmann::json;

namespace {

json vec_json(const double* v, int n) {
  json a = json::array();
  for (int k = 0; k < n; ++k) a.push_back(v[k]);
  return a;
}

template <class V>
V read_vec(const json& j, const char* what) {
  V out;
  if (!j.is_array() || static_cast<int>(j.size()) != out.size()) {
    throw Error(std::string(what) + " must be an array of " + std::to_string(out.size()) + " numbers");
  }
  for (int k = 0; k < out.size(); ++k) out[k] = j[k].get<double>();
  return out;
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const SceneObject& o : scene.objects) {
    json verts = json::array();
    for (const Vec3& v : o.mesh->vertices()) verts.push_back(vec_json(v.data(), 3));
    json faces = json::array();
    for (const Face& f : o.mesh->faces()) faces.push_back({f[0], f[1], f[2]});
    objects.push_back({{"id", o.id},
                       {"category", o.category},
                       {"mesh", {{"vertices", std::move(verts)}, {"faces", std::move(faces)}}},
                       {"position", vec_json(o.position.data(), 3)},
                       {"rotation6d", vec_json(o.rotation.data(), 6)}});
  }
  const int n = scene.size();
  json spatial = json::array();
  json physical = json::array();
  for (int i = 0; i < n; ++i) {
    json srow = json::array();
    json prow = json::array();
    for (int j = 0; j < n; ++j) {
      srow.push_back(std::string(to_string(scene.graphs.spatial(i, j))));
      prow.push_back(std::string(to_string(scene.graphs.physical(i, j))));
    }
    spatial.push_back(std::move(srow));
    physical.push_back(std::move(prow));
  }
  return {{"version", kSceneFormatVersion}, {"floor_height", scene.floor_height}, {"objects", std::move(objects)},
          {"spatial", std::move(spatial)},  {"physical", std::move(physical)}};
}

Scene scene_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kSceneFormatVersion) {
      throw Error("unsupported scene version " + j.at("version").dump());
    }
    Scene scene;
    scene.floor_height = j.value("floor_height", 0.0);
    for (const json& jo : j.at("objects")) {
      SceneObject o;
      o.id = jo.at("id").get<int>();
      o.category = jo.at("category").get<std::string>();
      std::vector<Vec3> verts;
      for (const json& v : jo.at("mesh").at("vertices")) verts.push_back(read_vec<Vec3>(v, "vertex"));
      std::vector<Face> faces;
      for (const json& f : jo.at("mesh").at("faces")) {
        if (!f.is_array() || f.size() != 3) throw Error("face must have 3 indices");
        faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
      }
      auto mesh = std::make_shared<const TriMesh>(std::move(verts), std::move(faces));
      o.shape_desc = shape_descriptor(*mesh);
      o.mesh = std::move(mesh);
      o.position = read_vec<Vec3>(jo.at("position"), "position");
      o.rotation = read_vec<Rot6>(jo.at("rotation6d"), "rotation6d");
      scene.objects.push_back(std::move(o));
    }
    const int n = scene.size();
    scene.graphs = RelationGraphs(n);
    const json& spatial = j.at("spatial");
    const json& physical = j.at("physical");
    if (spatial.size() != static_cast<std::size_t>(n) || physical.size() != static_cast<std::size_t>(n)) {
      throw GraphSizeMismatch("relation graphs do not match the object count");
    }
    for (int a = 0; a < n; ++a) {
      if (spatial[a].size() != static_cast<std::size_t>(n) || physical[a].size() != static_cast<std::size_t>(n)) {
        throw GraphSizeMismatch("relation graph row " + std::to_string(a) + " has the wrong length");
      }
      for (int b = 0; b < n; ++b) {
        scene.graphs.spatial(a, b) = parse_spatial(spatial[a][b].get<std::string>());
        scene.graphs.physical(a, b) = parse_physical(physical[a][b].get<std::string>());
      }
    }
    scene.validate();
    return scene;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scene JSON: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_scene(const std::filesystem::path& path, const Scene& scene) { write_json(path, scene_to_json(scene)); }

Scene read_scene(const std::filesystem::path& path) { return scene_from_json(read_json(path)); }

void write_obj(const std::filesystem::path& path, const Scene& scene) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(9);
  std::size_t base = 1;
  for (const SceneObject& o : scene.objects) {
    const TriMesh m = posed_mesh_lenient(o);
    out << "o " << o.id << "_" << (o.category.empty() ? "object" : o.category) << "\n";
    for (const Vec3& v : m.vertices()) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const Face& f : m.faces()) {
      out << "f " << base + f[0] << " " << base + f[1] << " " << base + f[2] << "\n";
    }
    base += m.vertices().size();
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace scenediff
