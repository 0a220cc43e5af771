#include "scenediff/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "scenediff/errors.hpp"
#include "scenediff/geom/collision.hpp"
#include "scenediff/geom/hull2d.hpp"
#include "scenediff/geom/mesh_distance.hpp"
#include "scenediff/geom/sampling.hpp"
#include "scenediff/geom/vertical_gap.hpp"

namespace scenediff {

namespace {

constexpr double kMoveTol = 1e-9;
constexpr double kContactTol = 1e-4;
constexpr double kSupportPenetration = 0.01;
constexpr double kBalanceTol = 1e-9;

double one_way_depth(const TriMesh& from, const TriMesh& into, int samples, std::uint64_t seed) {
  const geom::SurfaceSample s = geom::sample_surface(from, samples, seed);
  const Aabb box = into.bounds();
  double depth = 0.0;
  for (const Vec3& p : s.points) {
    if (!box.overlaps(Aabb{p, p})) continue;
    if (geom::winding_number(p, into) > 0.5) depth = std::max(depth, geom::point_mesh_distance(p, into));
  }
  return depth;
}

}  // namespace

// ---- Col_mesh ----------------------------------------------------------------

double penetration_depth(const TriMesh& a, const TriMesh& b, int samples, std::uint64_t seed) {
  return std::max(one_way_depth(a, b, samples, seed), one_way_depth(b, a, samples, seed + 1));
}

std::vector<bool> collision_flags(const Scene& scene, const MetricOptions& opts) {
  const auto posed = posed_meshes_lenient(scene);
  std::set<std::pair<int, int>> objects;
  for (const auto& p : geom::find_collision_pairs(posed)) objects.emplace(p.obj_a, p.obj_b);
  const std::vector<std::pair<int, int>> pairs(objects.begin(), objects.end());
  std::vector<char> deep(pairs.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
    const auto [a, b] = pairs[k];
    const std::uint64_t seed = opts.seed + 1000003ULL * static_cast<std::uint64_t>(a * scene.size() + b);
    deep[k] = penetration_depth(posed[a], posed[b], opts.penetration_samples, seed) > opts.penetration_threshold;
  }
  std::vector<bool> flags(scene.size(), false);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!deep[k]) continue;
    flags[pairs[k].first] = true;
    flags[pairs[k].second] = true;
  }
  return flags;
}

double col_mesh_rate(const std::vector<Scene>& scenes, const MetricOptions& opts) {
  long flagged = 0, total = 0;
  for (const Scene& s : scenes) {
    const auto f = collision_flags(s, opts);
    flagged += std::count(f.begin(), f.end(), true);
    total += s.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total);
}

// ---- GRecall -----------------------------------------------------------------

double RecallCounts::recall() const {
  const int total = spatial_total + physical_total;
  return total == 0 ? 1.0 : static_cast<double>(spatial_hit + physical_hit) / total;
}

RecallCounts& RecallCounts::operator+=(const RecallCounts& o) {
  spatial_total += o.spatial_total;
  spatial_hit += o.spatial_hit;
  physical_total += o.physical_total;
  physical_hit += o.physical_hit;
  return *this;
}

RecallCounts recall_counts(const Scene& scene, const RelationGraphs& truth, const RelationRules& rules) {
  if (truth.size() != scene.size()) throw GraphSizeMismatch("ground-truth graph size differs from the scene");
  const RelationGraphs derived = derive_relations(scene, rules);
  RecallCounts c;
  for (int i = 0; i < scene.size(); ++i) {
    for (int j = 0; j < scene.size(); ++j) {
      if (truth.spatial(i, j) != SpatialRel::none) {
        ++c.spatial_total;
        c.spatial_hit += derived.spatial(i, j) == truth.spatial(i, j);
      }
      if (truth.physical(i, j) != PhysicalRel::none) {
        ++c.physical_total;
        c.physical_hit += derived.physical(i, j) == truth.physical(i, j);
      }
    }
  }
  return c;
}

double grecall(const std::vector<Scene>& scenes, const std::vector<RelationGraphs>& truth, const RelationRules& rules) {
  if (scenes.size() != truth.size()) throw GraphSizeMismatch("scene and ground-truth counts differ");
  RecallCounts total;
  for (std::size_t k = 0; k < scenes.size(); ++k) total += recall_counts(scenes[k], truth[k], rules);
  return total.recall();
}

// ---- ASD ---------------------------------------------------------------------

std::vector<double> support_distances(const Scene& scene, const RelationGraphs& graphs) {
  if (graphs.size() != scene.size()) throw GraphSizeMismatch("support graph size differs from the scene");
  const auto posed = posed_meshes_lenient(scene);
  std::vector<double> out;
  for (int i = 0; i < scene.size(); ++i) {
    for (int j = 0; j < scene.size(); ++j) {
      if (graphs.physical(i, j) != PhysicalRel::support) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& v : posed[i].vertices()) best = std::min(best, geom::signed_point_mesh_distance(v, posed[j]));
      out.push_back(std::abs(best));
    }
  }
  return out;
}

std::optional<double> asd(const std::vector<Scene>& scenes) {
  double sum = 0.0;
  long count = 0;
  for (const Scene& s : scenes) {
    for (double d : support_distances(s, s.graphs)) {
      sum += d;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// ---- settling ----------------------------------------------------------------

namespace {

struct Settler {
  Scene& scene;
  std::vector<TriMesh> posed;
  int resolution;
  int topples = 0;

  void repose(int i) { posed[i] = posed_mesh_lenient(scene.objects[i]); }

  // Highest surface below object i: (gap, supporter or -1 for the floor).
  std::pair<double, int> support_below(int i) const {
    double best = posed[i].bounds().lo.y() - scene.floor_height;
    int who = -1;
    for (int k = 0; k < scene.size(); ++k) {
      if (k == i) continue;
      const double g = geom::contact_gap(posed[i], posed[k], resolution);
      if (std::isfinite(g) && g >= -kSupportPenetration && g < best) {
        best = g;
        who = k;
      }
    }
    return {best, who};
  }

  std::vector<Vec2> contact_region(int i, int supporter) const {
    const double low = posed[i].bounds().lo.y();
    std::vector<Vec3> contact;
    for (const Vec3& v : posed[i].vertices()) {
      if (v.y() <= low + kContactTol) contact.push_back(v);
    }
    const geom::Hull2D hc = geom::xz_hull(contact);
    if (supporter < 0 || hc.degenerate()) return hc.vertices;
    return geom::clip_convex(hc.vertices, geom::xz_hull(posed[supporter]).vertices);
  }

  // Nearest axis alignment (some local axis exactly up) that does not raise
  // the centre of mass above the lowest point; keeps the lowest point fixed.
  // False when no candidate qualifies or the pose is already aligned.
  bool snap_upright(int i) {
    SceneObject& o = scene.objects[i];
    const Mat3 r = rot6d_to_matrix_or_identity(o.rotation);
    const TriMesh& local = *o.mesh;
    const Vec3 com_local = local.center_of_mass();
    auto rest_height = [&](const Mat3& rot) {
      double low = std::numeric_limits<double>::infinity();
      for (const Vec3& v : local.vertices()) low = std::min(low, (rot * v).y());
      return (rot * com_local).y() - low;
    };
    const double current = rest_height(r);
    std::vector<std::pair<double, Mat3>> candidates;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {1.0, -1.0}) {
        const Vec3 w = sign * r.col(axis);
        Mat3 q;
        if (w.y() > 1.0 - 1e-15) {
          q.setIdentity();
        } else if (w.y() < -1.0 + 1e-15) {
          q = Eigen::AngleAxisd(M_PI, Vec3::UnitX()).toRotationMatrix();
        } else {
          const Vec3 ax = w.cross(Vec3::UnitY()).normalized();
          q = Eigen::AngleAxisd(std::acos(std::clamp(w.y(), -1.0, 1.0)), ax).toRotationMatrix();
        }
        candidates.emplace_back(w.y(), q * r);
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [score, rot] : candidates) {
      if (rest_height(rot) > current + 1e-12) continue;
      const double low_before = posed[i].bounds().lo.y();
      // Orthonormalize through the 6-D encoding so the pose stays valid.
      Mat3 clean;
      const Rot6 r6 = (Rot6() << rot.col(0), rot.col(1)).finished();
      decode_rot6d(r6.data(), clean);
      if ((clean - r).cwiseAbs().maxCoeff() <= 1e-12) return false;
      o.rotation = matrix_to_rot6d(clean);
      repose(i);
      o.position.y() += low_before - posed[i].bounds().lo.y();
      repose(i);
      return true;
    }
    return false;
  }

  void slide_off(int i, int supporter, const Vec2& away) {
    const geom::Hull2D hs = geom::xz_hull(posed[supporter]);
    const double step = 0.01 * std::max(0.05, posed[i].bounds().extent().maxCoeff());
    for (int k = 0; k < 10000; ++k) {
      const auto overlap = geom::clip_convex(geom::xz_hull(posed[i]).vertices, hs.vertices);
      if (geom::polygon_area(overlap) <= 1e-12) return;
      scene.objects[i].position.x() += step * away.x();
      scene.objects[i].position.z() += step * away.y();
      repose(i);
    }
  }

  bool balanced(int i, int supporter) const {
    const geom::Hull2D hull = geom::convex_hull(contact_region(i, supporter));
    return !hull.vertices.empty() &&
           geom::point_to_hull_distance(geom::xz(posed[i].center_of_mass()), hull) <= kBalanceTol;
  }

  // Drops object i onto the highest surface below it; returns the supporter.
  int drop(int i, bool& moved) {
    const auto [gap, supporter] = support_below(i);
    if (gap > kMoveTol) {
      scene.objects[i].position.y() -= gap;
      repose(i);
      moved = true;
    }
    return supporter;
  }

  bool settle_object(int i) {
    bool moved = false;
    int supporter = drop(i, moved);
    if (balanced(i, supporter)) return moved;

    // Tip over onto the nearest face; it stays put if that face is supported.
    const auto region = contact_region(i, supporter);
    Vec2 centre = Vec2::Zero();
    if (!region.empty()) {
      for (const Vec2& p : region) centre += p;
      centre /= static_cast<double>(region.size());
    } else {
      centre = geom::xz(posed[i].bounds().center());
    }
    Vec2 away = geom::xz(posed[i].center_of_mass()) - centre;
    away = away.norm() > 1e-12 ? Vec2(away.normalized()) : Vec2(1.0, 0.0);
    ++topples;
    if (snap_upright(i)) {
      moved = true;
      supporter = drop(i, moved);
      if (balanced(i, supporter)) return moved;
    }
    // Still unbalanced on an object: slide off the overhanging side and let
    // the next pass drop it.
    if (supporter >= 0) {
      slide_off(i, supporter, away);
      moved = true;
    }
    return moved;
  }
};

}  // namespace

SettleResult settle(const Scene& scene, int max_iters, int gap_resolution) {
  SettleResult res;
  res.scene = scene;
  Settler s{res.scene, posed_meshes_lenient(res.scene), gap_resolution};
  for (int iter = 1; iter <= max_iters; ++iter) {
    std::vector<int> order(scene.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s.posed[a].bounds().lo.y() < s.posed[b].bounds().lo.y(); });
    bool moved = false;
    for (int i : order) moved = s.settle_object(i) || moved;
    res.iterations = iter;
    if (!moved) {
      res.converged = true;
      break;
    }
  }
  res.topples = s.topples;
  return res;
}

double potential_energy(const Scene& scene) {
  const auto posed = posed_meshes_lenient(scene);
  double total = 0.0;
  for (int i = 0; i < scene.size(); ++i) {
    total += std::abs(scene.objects[i].mesh->volume()) * (posed[i].center_of_mass().y() - scene.floor_height);
  }
  return total;
}

// ---- stability ---------------------------------------------------------------

StabilityResult stability(const Scene& scene, const MetricOptions& opts) {
  StabilityResult res;
  const RelationGraphs before = derive_relations(scene, opts.rules);
  const int n = scene.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      res.edges += (before.spatial(i, j) != SpatialRel::none) + (before.physical(i, j) != PhysicalRel::none);
    }
  }
  if (res.edges == 0 || opts.stability_runs < 1) return res;
  std::vector<int> changed(opts.stability_runs, 0);
#pragma omp parallel for schedule(dynamic)
  for (int run = 0; run < opts.stability_runs; ++run) {
    std::mt19937_64 rng(opts.seed + 7919ULL * static_cast<std::uint64_t>(run + 1));
    std::normal_distribution<double> noise(0.0, opts.jitter_sigma);
    Scene jittered = scene;
    for (SceneObject& o : jittered.objects) {
      for (int k = 0; k < 3; ++k) o.position[k] += noise(rng);
    }
    const Scene settled = settle(jittered, opts.settle_max_iters, opts.rules.gap_resolution).scene;
    const RelationGraphs after = derive_relations(settled, opts.rules);
    int c = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        c += before.spatial(i, j) != SpatialRel::none && after.spatial(i, j) != before.spatial(i, j);
        c += before.physical(i, j) != PhysicalRel::none && after.physical(i, j) != before.physical(i, j);
      }
    }
    changed[run] = c;
  }
  res.changed = std::accumulate(changed.begin(), changed.end(), 0);
  res.stability = 1.0 - static_cast<double>(res.changed) / (static_cast<double>(res.edges) * opts.stability_runs);
  return res;
}

double stability(const std::vector<Scene>& scenes, const MetricOptions& opts) {
  if (scenes.empty()) return 1.0;
  double sum = 0.0;
  for (const Scene& s : scenes) sum += stability(s, opts).stability;
  return sum / static_cast<double>(scenes.size());
}

// ---- report ------------------------------------------------------------------

MetricReport evaluate(const std::vector<Scene>& scenes, const std::vector<RelationGraphs>& truth,
                      const MetricOptions& opts) {
  if (scenes.size() != truth.size()) throw GraphSizeMismatch("scene and ground-truth counts differ");
  MetricReport rep;
  RecallCounts recall;
  long flagged = 0, objects = 0, pairs = 0;
  double support_sum = 0.0, stab_sum = 0.0;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    SceneMetrics m;
    const auto flags = collision_flags(scenes[k], opts);
    m.objects = scenes[k].size();
    m.flagged = static_cast<int>(std::count(flags.begin(), flags.end(), true));
    m.recall = recall_counts(scenes[k], truth[k], opts.rules);
    m.support_distances = support_distances(scenes[k], truth[k]);
    m.stability = stability(scenes[k], opts).stability;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    flagged += m.flagged;
    objects += m.objects;
    recall += m.recall;
    for (double d : m.support_distances) support_sum += d;
    pairs += static_cast<long>(m.support_distances.size());
    stab_sum += m.stability;
    rep.per_scene.push_back(std::move(m));
  }
  rep.col_mesh = objects == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(objects);
  rep.grecall = recall.recall();
  rep.grecall_spatial = recall.spatial_total == 0 ? 1.0 : static_cast<double>(recall.spatial_hit) / recall.spatial_total;
  rep.grecall_physical =
      recall.physical_total == 0 ? 1.0 : static_cast<double>(recall.physical_hit) / recall.physical_total;
  if (pairs > 0) rep.asd = support_sum / static_cast<double>(pairs);
  rep.stability = scenes.empty() ? 1.0 : stab_sum / static_cast<double>(scenes.size());
  return rep;
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json scenes = nlohmann::json::array();
  for (const SceneMetrics& m : r.per_scene) {
    scenes.push_back({{"objects", m.objects},
                      {"flagged", m.flagged},
                      {"spatial_edges", m.recall.spatial_total},
                      {"spatial_hits", m.recall.spatial_hit},
                      {"physical_edges", m.recall.physical_total},
                      {"physical_hits", m.recall.physical_hit},
                      {"support_distances", m.support_distances},
                      {"stability", m.stability}});
  }
  return {{"col_mesh", r.col_mesh},
          {"grecall", r.grecall},
          {"grecall_spatial", r.grecall_spatial},
          {"grecall_physical", r.grecall_physical},
          {"asd", r.asd ? nlohmann::json(*r.asd) : nlohmann::json(nullptr)},
          {"stability", r.stability},
          {"scenes", std::move(scenes)}};
}

std::string report_table(const MetricReport& r) {
  char buf[256];
  std::string out = "Col_mesh   GRecall    ASD        Stability\n";
  const std::string asd_text = r.asd ? std::to_string(*r.asd).substr(0, 8) : std::string("n/a");
  std::snprintf(buf, sizeof(buf), "%-10.4f %-10.4f %-10s %-10.4f\n", r.col_mesh, r.grecall, asd_text.c_str(),
                r.stability);
  return out + buf;
}

}  // namespace scenediff
