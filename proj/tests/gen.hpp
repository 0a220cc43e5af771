#pragma once

// Hand-rolled generators for property tests. Every generator takes an
// explicit engine so failures replay from the printed seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "scenediff/guidance.hpp"
#include "scenediff/relations.hpp"
#include "scenediff/rotation.hpp"
#include "scenediff/scene.hpp"
#include "scenediff/shape.hpp"
#include "scenediff/synth.hpp"

namespace gen {

using namespace scenediff;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
inline int integer(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Vec3 vec3(Rng& rng, double lo, double hi) { return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)}; }
inline Vec3 gaussian3(Rng& rng) { return {normal(rng), normal(rng), normal(rng)}; }

// Uniform on SO(3) through a normalized Gaussian quaternion.
inline Mat3 rotation(Rng& rng) {
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Rot6 rot6_noise(Rng& rng) {
  Rot6 r;
  for (int k = 0; k < 6; ++k) r[k] = normal(rng);
  return r;
}

inline std::shared_ptr<const TriMesh> box(const Vec3& size) { return std::make_shared<const TriMesh>(make_box(size)); }

inline SceneObject object(int id, std::shared_ptr<const TriMesh> mesh, const Vec3& position,
                          const Mat3& rot = Mat3::Identity(), const std::string& category = "box") {
  SceneObject o;
  o.id = id;
  o.category = category;
  o.shape_desc = shape_descriptor(*mesh);
  o.mesh = std::move(mesh);
  o.position = position;
  o.rotation = matrix_to_rot6d(rot);
  return o;
}

// Objects with graphs derived from their poses.
inline Scene scene(std::vector<SceneObject> objects) {
  Scene s;
  s.objects = std::move(objects);
  s.graphs = derive_relations(s);
  return s;
}

// Two boxes of random size and pose in a small cube, likely to touch or overlap.
inline Scene box_pair(Rng& rng, double spread = 0.6) {
  std::vector<SceneObject> objs;
  for (int i = 0; i < 2; ++i) {
    objs.push_back(object(i, box(vec3(rng, 0.3, 1.0)), vec3(rng, -spread, spread), rotation(rng)));
  }
  return scene(std::move(objs));
}

// Closed random mesh: a star-shaped sphere with jittered radii.
inline TriMesh blob(Rng& rng, int rings, int segments, double jitter = 0.3) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  const double pi = std::acos(-1.0);
  v.push_back({0, 1, 0});
  for (int r = 1; r < rings; ++r) {
    const double th = pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double ph = 2 * pi * s / segments;
      const double rad = 1.0 + uniform(rng, -jitter, jitter);
      v.push_back(rad * Vec3(std::sin(th) * std::cos(ph), std::cos(th), std::sin(th) * std::sin(ph)));
    }
  }
  v.push_back({0, -1, 0});
  const int south = static_cast<int>(v.size()) - 1;
  auto at = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) f.push_back({0, at(1, s + 1), at(1, s)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      f.push_back({at(r, s), at(r, s + 1), at(r + 1, s + 1)});
      f.push_back({at(r, s), at(r + 1, s + 1), at(r + 1, s)});
    }
  }
  for (int s = 0; s < segments; ++s) f.push_back({south, at(rings - 1, s), at(rings - 1, s + 1)});
  return TriMesh(std::move(v), std::move(f));
}

// Random permutation of [0, n).
inline std::vector<int> permutation(Rng& rng, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Object i of the result is object perm[i] of the input; graphs follow.
inline Scene permute(const Scene& s, const std::vector<int>& perm) {
  Scene out = s;
  const int n = s.size();
  out.graphs = RelationGraphs(n);
  for (int i = 0; i < n; ++i) {
    out.objects[i] = s.objects[perm[i]];
    out.objects[i].id = i;
    for (int j = 0; j < n; ++j) {
      out.graphs.spatial(i, j) = s.graphs.spatial(perm[i], perm[j]);
      out.graphs.physical(i, j) = s.graphs.physical(perm[i], perm[j]);
    }
  }
  return out;
}


// Small random tilt about a random horizontal axis.
inline Mat3 tilt(Rng& rng, double max_angle) {
  const double a = uniform(rng, 0, 2 * std::acos(-1.0));
  return Eigen::AngleAxisd(uniform(rng, -max_angle, max_angle), Vec3(std::cos(a), 0, std::sin(a))).toRotationMatrix();
}

// Configuration exercising one guidance term with a non-zero energy.
inline Scene term_case(Rng& rng, Term term) {
  const Mat3 yaw = yaw_matrix(uniform(rng, 0, 6.283));
  const Vec3 ls = vec3(rng, 0.6, 1.2);
  const Vec3 us = vec3(rng, 0.2, 0.5);
  std::vector<SceneObject> objs;
  // A slight tilt of the base breaks ties between its extreme vertices.
  const double lean = uniform(rng, 0.03, 0.1) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
  const double a = uniform(rng, 0, 2 * std::acos(-1.0));
  const Mat3 base_rot = yaw * Eigen::AngleAxisd(lean, Vec3(std::cos(a), 0, std::sin(a))).toRotationMatrix();
  objs.push_back(object(0, box(ls), {uniform(rng, -1, 1), 0, uniform(rng, -1, 1)}, base_rot));
  double low = 1e9;
  for (const Vec3& v : objs[0].mesh->vertices()) low = std::min(low, (base_rot * v).y());
  objs[0].position.y() = 0.025 - low;
  const Vec3 base = objs[0].position;
  Vec3 p;
  Mat3 r = yaw * tilt(rng, 0.2);
  switch (term) {
    case Term::collision:
      p = base + vec3(rng, -0.4, 0.4);
      r = rotation(rng);
      break;
    case Term::gravity:
      p = base + Vec3(uniform(rng, -0.1, 0.1), ls.y() / 2 + us.y() / 2 + uniform(rng, 0.08, 0.5), uniform(rng, -0.1, 0.1));
      break;
    case Term::relation:
      p = base + Vec3(uniform(rng, 0.2, 0.45) * ls.x(), ls.y() / 2 + us.y() / 2 + 0.005, uniform(rng, -0.3, 0.3) * ls.z());
      break;
  }
  objs.push_back(object(1, box(us), p, r));
  Scene s;
  s.objects = std::move(objs);
  s.graphs = RelationGraphs(2);
  if (term != Term::collision) s.graphs.physical(1, 0) = PhysicalRel::support;
  return s;
}

// True when every central-difference stencil point with step h shares the
// discrete choices of the centre, so the energy is smooth across the stencil.
inline bool interior(const Scene& s, Term term, const GuidanceConfig& cfg, double h) {
  const auto sig = guidance_signature(s, term, cfg);
  Matrix x = flatten_scene(s);
  for (int i = 0; i < x.rows(); ++i) {
    for (int k = 0; k < x.cols(); ++k) {
      for (double d : {h, -h}) {
        Matrix y = x;
        y(i, k) += d;
        if (guidance_signature(unflatten(y, s), term, cfg) != sig) return false;
      }
    }
  }
  return true;
}

// Worst componentwise |a - f|, relative to the largest |f| of the gradient.
inline double gradient_error(const Matrix& analytic, const Matrix& fd) {
  const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace gen
