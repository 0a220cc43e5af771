#include "scenediff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "scenediff/errors.hpp"
#include "scenediff/geom/hull2d.hpp"
#include "scenediff/relations.hpp"
#include "scenediff/scene_io.hpp"
#include "scenediff/shape.hpp"

namespace scenediff {

namespace {

// Extra clearance above the configured gap so round-off never pushes a
// resting object below it.
constexpr double kGapCushion = 1e-9;
// Stacked objects keep this distance from their supporter's rim.
constexpr double kRimMargin = 0.01;
// Spatial labels must survive this per-coordinate perturbation.
constexpr double kLabelRobustness = 0.02;

void append_box(std::vector<Vec3>& verts, std::vector<Face>& faces, const Vec3& size, const Vec3& center) {
  const int base = static_cast<int>(verts.size());
  for (int k = 0; k < 8; ++k) {
    const Vec3 corner((k & 1) ? 0.5 : -0.5, (k & 2) ? 0.5 : -0.5, (k & 4) ? 0.5 : -0.5);
    verts.push_back(center + corner.cwiseProduct(size));
  }
  static constexpr std::array<Face, 12> kFaces = {{{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5},
                                                   {0, 1, 5}, {0, 5, 4}, {2, 6, 7}, {2, 7, 3},
                                                   {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}}};
  for (const Face& f : kFaces) faces.push_back({base + f[0], base + f[1], base + f[2]});
}

struct Kind {
  const char* category;
  bool small;
  bool can_support;
};

constexpr std::array<Kind, 5> kKinds = {{{"table", false, true},
                                         {"cabinet", false, true},
                                         {"stool", false, true},
                                         {"box", true, true},
                                         {"mug", true, false}}};

TriMesh make_kind(int kind, std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  switch (kind) {
    case 0: return make_table({u(0.8, 1.6), u(0.6, 0.9), u(0.6, 1.0)}, 0.05, 0.06);
    case 1: return make_box({u(0.4, 1.0), u(0.5, 1.2), u(0.4, 0.8)});
    case 2: return make_cylinder(u(0.18, 0.3), u(0.4, 0.6));
    case 3: return make_box({u(0.1, 0.35), u(0.1, 0.35), u(0.1, 0.35)});
    default: return make_cylinder(u(0.04, 0.1), u(0.08, 0.22));
  }
}

struct Placed {
  int kind = 0;
  std::shared_ptr<const TriMesh> mesh;
  TriMesh posed;
  Vec3 position;
  Mat3 rotation;
  int supporter = -1;
  int depth = 1;
  geom::Hull2D hull;
};

double xz_box_gap(const Aabb& a, const Aabb& b) {
  const double gx = std::max({a.lo.x() - b.hi.x(), b.lo.x() - a.hi.x(), 0.0});
  const double gz = std::max({a.lo.z() - b.hi.z(), b.lo.z() - a.hi.z(), 0.0});
  return std::hypot(gx, gz);
}

bool label_is_robust(const Vec3& delta) {
  const SpatialRel base = spatial_label(delta, Vec3::Zero());
  for (int k = 0; k < 27; ++k) {
    const Vec3 s(k % 3 - 1, (k / 3) % 3 - 1, k / 9 - 1);
    if (spatial_label(delta + kLabelRobustness * s, Vec3::Zero()) != base) return false;
  }
  return true;
}

// Every posed vertex inside the supporter hull and at least kRimMargin from its rim.
bool inside_with_margin(const TriMesh& posed, const geom::Hull2D& hull) {
  if (hull.degenerate()) return false;
  const auto& hv = hull.vertices;
  for (const Vec3& v : posed.vertices()) {
    const Vec2 p = geom::xz(v);
    for (std::size_t e = 0; e < hv.size(); ++e) {
      const Vec2 a = hv[e];
      const Vec2 b = hv[(e + 1) % hv.size()];
      const Vec2 edge = b - a;
      const double signed_dist = (edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x())) / edge.norm();
      if (signed_dist < kRimMargin) return false;
    }
  }
  return true;
}

bool is_ancestor(const std::vector<Placed>& placed, int candidate, int supporter) {
  for (int s = supporter; s >= 0; s = placed[s].supporter) {
    if (s == candidate) return true;
  }
  return false;
}

}  // namespace

TriMesh make_box(const Vec3& size) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  append_box(verts, faces, size, Vec3::Zero());
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw Error("cylinder needs at least 3 segments");
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  for (int level = 0; level < 2; ++level) {
    const double y = level == 0 ? -0.5 * height : 0.5 * height;
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * std::numbers::pi * i / segments;
      verts.emplace_back(radius * std::cos(a), y, radius * std::sin(a));
    }
  }
  const int bc = static_cast<int>(verts.size());
  verts.emplace_back(0.0, -0.5 * height, 0.0);
  verts.emplace_back(0.0, 0.5 * height, 0.0);
  const int tc = bc + 1;
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    const int b0 = i, b1 = j, t0 = segments + i, t1 = segments + j;
    faces.push_back({b0, t0, b1});
    faces.push_back({b1, t0, t1});
    faces.push_back({tc, t1, t0});
    faces.push_back({bc, b0, b1});
  }
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh make_table(const Vec3& size, double top_thickness, double leg_width) {
  constexpr double kLegInset = 0.02;
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  append_box(verts, faces, {size.x(), top_thickness, size.z()}, {0.0, 0.5 * (size.y() - top_thickness), 0.0});
  const double leg_h = size.y() - top_thickness;
  const double lx = 0.5 * size.x() - 0.5 * leg_width - kLegInset;
  const double lz = 0.5 * size.z() - 0.5 * leg_width - kLegInset;
  for (int k = 0; k < 4; ++k) {
    const Vec3 c((k & 1) ? lx : -lx, -0.5 * size.y() + 0.5 * leg_h, (k & 2) ? lz : -lz);
    append_box(verts, faces, {leg_width, leg_h, leg_width}, c);
  }
  return TriMesh(std::move(verts), std::move(faces));
}

void GenSpec::validate() const {
  if (min_objects < 1 || max_objects < min_objects) throw ConfigError("object count range is empty");
  if (!(room_x > 0.0) || !(room_z > 0.0)) throw ConfigError("room extents must be positive");
  if (!(stack_probability >= 0.0 && stack_probability <= 1.0)) throw ConfigError("stack_probability outside [0, 1]");
  if (max_depth < 1 || max_depth > 3) throw ConfigError("max_depth must be in [1, 3]");
  if (!(gap >= 0.0) || !(clearance >= 0.0)) throw ConfigError("gap and clearance must be non-negative");
  if (max_rejections < 1) throw ConfigError("max_rejections must be positive");
}

nlohmann::json gen_spec_to_json(const GenSpec& s) {
  return {{"min_objects", s.min_objects}, {"max_objects", s.max_objects},
          {"room_x", s.room_x},           {"room_z", s.room_z},
          {"stack_probability", s.stack_probability}, {"max_depth", s.max_depth},
          {"gap", s.gap},                 {"clearance", s.clearance},
          {"max_rejections", s.max_rejections}};
}

Scene gen_scene(const GenSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int n = std::uniform_int_distribution<int>(spec.min_objects, spec.max_objects)(rng);

  std::vector<Placed> placed;
  int rejections = 0;
  while (static_cast<int>(placed.size()) < n) {
    std::vector<int> supporters;
    for (int i = 0; i < static_cast<int>(placed.size()); ++i) {
      if (kKinds[placed[i].kind].can_support && placed[i].depth < spec.max_depth) supporters.push_back(i);
    }
    const bool stacked = !supporters.empty() && u(0.0, 1.0) < spec.stack_probability;

    Placed obj;
    if (stacked) {
      obj.supporter = supporters[std::uniform_int_distribution<std::size_t>(0, supporters.size() - 1)(rng)];
      obj.kind = std::uniform_int_distribution<int>(3, 4)(rng);
      obj.depth = placed[obj.supporter].depth + 1;
    } else {
      obj.kind = u(0.0, 1.0) < 0.8 ? std::uniform_int_distribution<int>(0, 2)(rng)
                                   : std::uniform_int_distribution<int>(3, 4)(rng);
    }
    obj.mesh = std::make_shared<const TriMesh>(make_kind(obj.kind, rng));
    obj.rotation = yaw_matrix(u(0.0, 2.0 * std::numbers::pi));
    const TriMesh oriented = obj.mesh->transformed(obj.rotation, Vec3::Zero());
    const Aabb ob = oriented.bounds();

    double base_y = 0.0;
    Vec2 xz_pos;
    if (stacked) {
      const Placed& sup = placed[obj.supporter];
      const Aabb sb = sup.posed.bounds();
      base_y = sb.hi.y();
      xz_pos = {u(sb.lo.x(), sb.hi.x()), u(sb.lo.z(), sb.hi.z())};
    } else {
      const double hx = 0.5 * spec.room_x, hz = 0.5 * spec.room_z;
      if (ob.extent().x() >= spec.room_x || ob.extent().z() >= spec.room_z) {
        throw PlacementFailure("room is smaller than a " + std::string(kKinds[obj.kind].category));
      }
      xz_pos = {u(-hx - ob.lo.x(), hx - ob.hi.x()), u(-hz - ob.lo.z(), hz - ob.hi.z())};
    }
    obj.position = Vec3(xz_pos.x(), base_y + spec.gap + kGapCushion - ob.lo.y(), xz_pos.y());
    obj.posed = obj.mesh->transformed(obj.rotation, obj.position);
    obj.hull = geom::xz_hull(obj.posed);

    bool ok = !stacked || inside_with_margin(obj.posed, placed[obj.supporter].hull);
    for (int i = 0; ok && i < static_cast<int>(placed.size()); ++i) {
      if (!is_ancestor(placed, i, obj.supporter) &&
          xz_box_gap(obj.posed.bounds(), placed[i].posed.bounds()) < spec.clearance) {
        ok = false;
      }
      if (ok && !label_is_robust(obj.position - placed[i].position)) ok = false;
    }
    if (ok) {
      placed.push_back(std::move(obj));
    } else if (++rejections >= spec.max_rejections) {
      throw PlacementFailure("could not place object " + std::to_string(placed.size()) + " of " +
                             std::to_string(n) + " after " + std::to_string(rejections) + " rejections");
    }
  }

  Scene scene;
  scene.graphs = RelationGraphs(n);
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.id = i;
    o.category = kKinds[placed[i].kind].category;
    o.mesh = placed[i].mesh;
    o.position = placed[i].position;
    o.rotation = matrix_to_rot6d(placed[i].rotation);
    o.shape_desc = shape_descriptor(*o.mesh);
    scene.objects.push_back(std::move(o));
    if (placed[i].supporter >= 0) scene.graphs.physical(i, placed[i].supporter) = PhysicalRel::support;
  }
  scene.graphs.spatial = derive_relations(scene).spatial;
  scene.validate();
  return scene;
}

std::uint64_t scene_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DatasetManifest gen_dataset(const GenSpec& spec, int count, double split_ratio, std::uint64_t seed,
                            const std::filesystem::path& out_dir) {
  if (count < 2) throw Error("dataset needs at least 2 scenes");
  if (!(split_ratio >= 0.0 && split_ratio <= 1.0)) throw ConfigError("split ratio outside [0, 1]");
  spec.validate();
  const int n_train = static_cast<int>(std::lround(count * split_ratio));
  DatasetManifest manifest;
  std::vector<Scene> scenes(count);
  for (int k = 0; k < count; ++k) manifest.seeds.push_back(scene_seed(seed, k));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) scenes[k] = gen_scene(spec, manifest.seeds[k]);
  for (int k = 0; k < count; ++k) {
    const bool train = k < n_train;
    char name[64];
    std::snprintf(name, sizeof(name), "%s/scene_%05d.json", train ? "train" : "test", train ? k : k - n_train);
    write_scene(out_dir / name, scenes[k]);
    (train ? manifest.train : manifest.test).push_back(name);
  }
  write_json(out_dir / "manifest.json", {{"train", manifest.train},
                                         {"test", manifest.test},
                                         {"spec", gen_spec_to_json(spec)},
                                         {"seed", seed},
                                         {"seeds", manifest.seeds}});
  return manifest;
}

std::vector<Scene> load_split(const std::filesystem::path& manifest_path, const std::string& split) {
  const nlohmann::json m = read_json(manifest_path);
  if (!m.contains(split)) throw Error("manifest has no split '" + split + "'");
  std::vector<Scene> out;
  for (const auto& rel : m.at(split)) out.push_back(read_scene(manifest_path.parent_path() / rel.get<std::string>()));
  return out;
}

}  // namespace scenediff
