#include "scenediff/guidance.hpp"

#include <cmath>
#include <string>

#include <ceres/jet.h>

#include "scenediff/errors.hpp"
#include "scenediff/geom/collision.hpp"
#include "scenediff/geom/hull2d.hpp"
#include "scenediff/geom/vertical_gap.hpp"
#include "scenediff/log.hpp"

namespace scenediff {

namespace {

// Two objects' 9 pose parameters per term: slots 0..8 and 9..17.
constexpr int kJetDim = 2 * kStateWidth;
using J = ceres::Jet<double, kJetDim>;
using V3J = Eigen::Matrix<J, 3, 1>;
using V2J = Eigen::Matrix<J, 2, 1>;
using Signature = std::vector<std::int64_t>;

struct JetPose {
  Eigen::Matrix<J, 3, 3> rotation;
  V3J position;
  V3J apply(const Vec3& v) const { return rotation * v.cast<J>() + position; }
};

JetPose jet_pose(const SceneObject& o, int offset) {
  J r[6];
  for (int k = 0; k < 6; ++k) r[k] = J(o.rotation[k], offset + 3 + k);
  JetPose jp;
  decode_rot6d(r, jp.rotation);
  for (int k = 0; k < 3; ++k) jp.position[k] = J(o.position[k], offset + k);
  return jp;
}

std::vector<V3J> jet_vertices(const JetPose& pose, const TriMesh& local) {
  std::vector<V3J> out;
  out.reserve(local.num_vertices());
  for (const Vec3& v : local.vertices()) out.push_back(pose.apply(v));
  return out;
}

// One differentiable contribution touching objects a and b (b may be -1).
struct Contribution {
  int a = -1;
  int b = -1;
  J value;
};

void scatter(const Contribution& c, double weight, Matrix& grad) {
  for (int k = 0; k < kStateWidth; ++k) {
    grad(c.a, k) += weight * c.value.v[k];
    if (c.b >= 0) grad(c.b, k) += weight * c.value.v[kStateWidth + k];
  }
}

struct Context {
  const Scene& scene;
  const GuidanceConfig& cfg;
  std::vector<TriMesh> posed;
  Matrix* grad = nullptr;
  Signature* sig = nullptr;
  int active = 0;

  Context(const Scene& s, const GuidanceConfig& c) : scene(s), cfg(c), posed(posed_meshes_lenient(s)) {}
};

// ---- collision -------------------------------------------------------------

template <class T, class V>
T pair_penalty(const std::array<V, 3>& ta, const std::array<V, 3>& tb, unsigned* pattern) {
  auto one_way = [&](const std::array<V, 3>& t, const std::array<V, 3>& other, int bit0) {
    const V nraw = (other[1] - other[0]).cross(other[2] - other[0]);
    using std::sqrt;
    const V n = nraw / sqrt(nraw.squaredNorm());
    const V c = (other[0] + other[1] + other[2]) / T(3.0);
    T sum = T(0.0);
    for (int k = 0; k < 3; ++k) {
      const T depth = -n.dot(t[k] - c);
      if (detail::scalar_value(depth) > 0.0) {
        sum += depth;
        if (pattern) *pattern |= 1u << (bit0 + k);
      }
    }
    return sum / T(3.0);
  };
  return T(0.5) * (one_way(ta, tb, 0) + one_way(tb, ta, 3));
}

double collision_term(Context& ctx) {
  const auto pairs = geom::find_collision_pairs(ctx.posed);
  ctx.active = static_cast<int>(pairs.size());
  if (ctx.sig) {
    ctx.sig->push_back(static_cast<std::int64_t>(pairs.size()));
    for (const auto& p : pairs) ctx.sig->insert(ctx.sig->end(), {p.obj_a, p.face_a, p.obj_b, p.face_b});
  }
  if (pairs.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(pairs.size());

  std::vector<double> values(pairs.size());
  std::vector<unsigned> patterns(pairs.size(), 0u);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const auto ta = ctx.posed[p.obj_a].triangle(p.face_a);
    const auto tb = ctx.posed[p.obj_b].triangle(p.face_b);
    values[k] = pair_penalty<double>(ta, tb, &patterns[k]);
  }
  if (ctx.sig) ctx.sig->insert(ctx.sig->end(), patterns.begin(), patterns.end());

  if (ctx.grad) {
    const int n = ctx.scene.size();
    std::vector<JetPose> first(n), second(n);
    for (int i = 0; i < n; ++i) {
      first[i] = jet_pose(ctx.scene.objects[i], 0);
      second[i] = jet_pose(ctx.scene.objects[i], kStateWidth);
    }
    std::vector<Contribution> contrib(pairs.size());
#pragma omp parallel for schedule(static)
    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
      const auto& p = pairs[k];
      const TriMesh& ma = *ctx.scene.objects[p.obj_a].mesh;
      const TriMesh& mb = *ctx.scene.objects[p.obj_b].mesh;
      std::array<V3J, 3> ta, tb;
      for (int c = 0; c < 3; ++c) {
        ta[c] = first[p.obj_a].apply(ma.vertices()[ma.faces()[p.face_a][c]]);
        tb[c] = second[p.obj_b].apply(mb.vertices()[mb.faces()[p.face_b][c]]);
      }
      contrib[k] = {p.obj_a, p.obj_b, pair_penalty<J>(ta, tb, nullptr)};
    }
    for (const auto& c : contrib) scatter(c, inv, *ctx.grad);
  }
  double total = 0.0;
  for (double v : values) total += v;
  return total * inv;
}

// ---- gravity ---------------------------------------------------------------

enum class GapMode : std::int64_t { exempt, floor, supporter, supporter_boxes };

int argmin_y(const TriMesh& m) {
  int best = 0;
  for (std::size_t i = 1; i < m.num_vertices(); ++i) {
    if (m.vertices()[i].y() < m.vertices()[best].y()) best = static_cast<int>(i);
  }
  return best;
}

int argmax_y(const TriMesh& m) {
  int best = 0;
  for (std::size_t i = 1; i < m.num_vertices(); ++i) {
    if (m.vertices()[i].y() > m.vertices()[best].y()) best = static_cast<int>(i);
  }
  return best;
}

double gravity_term(Context& ctx) {
  const int n = ctx.scene.size();
  const GuidanceConfig& cfg = ctx.cfg;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int s = ctx.scene.graphs.supporter_of(i);
    const TriMesh& mi = ctx.posed[i];
    const int low = argmin_y(mi);
    GapMode mode = GapMode::exempt;
    geom::GapWitness w;
    int high = -1;
    double d = 0.0;
    if (s >= 0) {
      w = geom::vertical_gap_witness(mi, ctx.posed[s], cfg.gap_resolution);
      if (w.found()) {
        mode = GapMode::supporter;
        d = w.gap;
      } else {
        // No shared XZ column: fall back to the bounding-box gap.
        mode = GapMode::supporter_boxes;
        high = argmax_y(ctx.posed[s]);
        d = mi.vertices()[low].y() - ctx.posed[s].vertices()[high].y();
      }
    } else {
      d = mi.vertices()[low].y() - ctx.scene.floor_height;
      if (d <= cfg.floor_reach) mode = GapMode::floor;
    }
    const double r = d - cfg.eps_gap;
    const bool violated = mode != GapMode::exempt && (r > cfg.theta_h || r < 0.0);
    if (ctx.sig) {
      ctx.sig->insert(ctx.sig->end(), {static_cast<std::int64_t>(mode), s, low, high, violated ? (r < 0 ? -1 : 1) : 0});
      if (mode == GapMode::supporter) {
        ctx.sig->insert(ctx.sig->end(), {w.column_x, w.column_z, w.face_upper, w.face_lower});
        for (int k = 0; k < 4; ++k) ctx.sig->insert(ctx.sig->end(), {w.box_mesh[k], w.box_vertex[k]});
      }
    }
    if (!violated) continue;
    ++ctx.active;
    total += std::abs(r);
    if (!ctx.grad) continue;

    const SceneObject& oi = ctx.scene.objects[i];
    const JetPose pi = jet_pose(oi, 0);
    Contribution c{i, -1, J(0.0)};
    if (mode == GapMode::floor) {
      c.value = pi.apply(oi.mesh->vertices()[low])[1] - J(ctx.scene.floor_height);
    } else {
      const SceneObject& os = ctx.scene.objects[s];
      const JetPose ps = jet_pose(os, kStateWidth);
      c.b = s;
      if (mode == GapMode::supporter) {
        const auto vu = jet_vertices(pi, *oi.mesh);
        const auto vl = jet_vertices(ps, *os.mesh);
        c.value = geom::vertical_gap_from_witness<J>(w, vu, oi.mesh->faces(), vl, os.mesh->faces(),
                                                     cfg.gap_resolution);
      } else {
        c.value = pi.apply(oi.mesh->vertices()[low])[1] - ps.apply(os.mesh->vertices()[high])[1];
      }
    }
    scatter(c, r < 0.0 ? -1.0 : 1.0, *ctx.grad);
  }
  return total;
}

// ---- relation --------------------------------------------------------------

double relation_term(Context& ctx) {
  const int n = ctx.scene.size();
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (ctx.scene.graphs.physical(i, j) == PhysicalRel::support) edges.emplace_back(i, j);
    }
  }
  if (ctx.sig) ctx.sig->push_back(static_cast<std::int64_t>(edges.size()));
  if (edges.empty()) return 0.0;
  const double inv_e = 1.0 / static_cast<double>(edges.size());
  double total = 0.0;
  for (const auto& [i, j] : edges) {
    const geom::Hull2D hull = geom::xz_hull(ctx.posed[j]);
    std::vector<std::pair<int, int>> outside;  // (vertex of i, nearest hull edge)
    double sum = 0.0;
    const auto& vi = ctx.posed[i].vertices();
    for (std::size_t v = 0; v < vi.size(); ++v) {
      int edge = -1;
      const double s = geom::point_to_hull_distance(geom::xz(vi[v]), hull, &edge);
      if (s > 0.0) {
        outside.emplace_back(static_cast<int>(v), edge);
        sum += s;
      }
    }
    if (ctx.sig) {
      ctx.sig->push_back(static_cast<std::int64_t>(hull.indices.size()));
      ctx.sig->insert(ctx.sig->end(), hull.indices.begin(), hull.indices.end());
      ctx.sig->push_back(static_cast<std::int64_t>(outside.size()));
      for (const auto& [v, e] : outside) ctx.sig->insert(ctx.sig->end(), {v, e});
    }
    if (outside.empty()) continue;
    ctx.active += static_cast<int>(outside.size());
    const double inv_v = 1.0 / static_cast<double>(outside.size());
    total += sum * inv_v * inv_e;
    if (!ctx.grad) continue;

    const SceneObject& oi = ctx.scene.objects[i];
    const SceneObject& oj = ctx.scene.objects[j];
    const JetPose pi = jet_pose(oi, 0);
    const JetPose pj = jet_pose(oj, kStateWidth);
    const std::size_t hn = hull.indices.size();
    Contribution c{i, j, J(0.0)};
    for (const auto& [v, e] : outside) {
      const V3J p = pi.apply(oi.mesh->vertices()[v]);
      const V3J a = pj.apply(oj.mesh->vertices()[hull.indices[e]]);
      const V3J b = pj.apply(oj.mesh->vertices()[hull.indices[(e + 1) % hn]]);
      c.value += geom::point_segment_distance_2d<J>(V2J(p[0], p[2]), V2J(a[0], a[2]), V2J(b[0], b[2]));
    }
    scatter(c, inv_v * inv_e, *ctx.grad);
  }
  return total;
}

double run_term(Context& ctx, Term term) {
  switch (term) {
    case Term::collision: return collision_term(ctx);
    case Term::gravity: return gravity_term(ctx);
    case Term::relation: return relation_term(ctx);
  }
  return 0.0;
}

double weight_of(Term term, const GuidanceConfig& cfg) {
  switch (term) {
    case Term::collision: return cfg.lambda_c;
    case Term::gravity: return cfg.lambda_h;
    case Term::relation: return cfg.lambda_r;
  }
  return 0.0;
}

constexpr std::array<Term, 3> kTerms = {Term::collision, Term::gravity, Term::relation};

double weighted_energy(const Scene& scene, const GuidanceConfig& cfg) {
  Context ctx(scene, cfg);
  double total = 0.0;
  for (Term t : kTerms) {
    if (weight_of(t, cfg) != 0.0) total += weight_of(t, cfg) * run_term(ctx, t);
  }
  return total;
}

template <class F>
Matrix central_differences(const Scene& scene, double h, F&& energy) {
  Matrix x = flatten_scene(scene);
  Matrix grad = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    for (int k = 0; k < x.cols(); ++k) {
      const double orig = x(i, k);
      x(i, k) = orig + h;
      const double up = energy(unflatten(x, scene));
      x(i, k) = orig - h;
      const double down = energy(unflatten(x, scene));
      x(i, k) = orig;
      grad(i, k) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace

GradMode parse_grad_mode(std::string_view s) {
  if (s == "analytic") return GradMode::analytic;
  if (s == "finite_difference") return GradMode::finite_difference;
  throw ConfigError("unknown grad_mode '" + std::string(s) + "'");
}

void GuidanceConfig::validate(int steps) const {
  if (!(lambda_c >= 0.0) || !(lambda_h >= 0.0) || !(lambda_r >= 0.0)) throw ConfigError("guidance weights must be >= 0");
  if (!(eps_gap >= 0.0)) throw ConfigError("eps_gap must be >= 0");
  if (!(theta_h >= 0.0)) throw ConfigError("theta_h must be >= 0");
  if (!(floor_reach >= 0.0)) throw ConfigError("floor_reach must be >= 0");
  if (start_t < 0 || start_t > steps) throw ConfigError("guidance start_t must lie in [0, T]");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  if (gap_resolution < 1) throw ConfigError("gap_resolution must be positive");
}

double collision_energy(const Scene& scene) { return term_energy(scene, Term::collision, GuidanceConfig{}); }
double gravity_energy(const Scene& scene, const GuidanceConfig& cfg) { return term_energy(scene, Term::gravity, cfg); }
double relation_energy(const Scene& scene) { return term_energy(scene, Term::relation, GuidanceConfig{}); }

double term_energy(const Scene& scene, Term term, const GuidanceConfig& cfg) {
  Context ctx(scene, cfg);
  return run_term(ctx, term);
}

Matrix term_gradient(const Scene& scene, Term term, const GuidanceConfig& cfg) {
  Context ctx(scene, cfg);
  Matrix grad = Matrix::Zero(scene.size(), kStateWidth);
  ctx.grad = &grad;
  run_term(ctx, term);
  return grad;
}

Matrix term_gradient_fd(const Scene& scene, Term term, const GuidanceConfig& cfg, double h) {
  return central_differences(scene, h, [&](const Scene& s) { return term_energy(s, term, cfg); });
}

GuidanceReport composite_gradient(const Scene& scene, const GuidanceConfig& cfg, bool strict) {
  GuidanceReport rep;
  rep.gradient = Matrix::Zero(scene.size(), kStateWidth);
  Context ctx(scene, cfg);
  Matrix term_grad(scene.size(), kStateWidth);
  for (Term t : kTerms) {
    const double w = weight_of(t, cfg);
    const bool analytic = cfg.grad_mode == GradMode::analytic && w != 0.0;
    term_grad.setZero();
    ctx.grad = analytic ? &term_grad : nullptr;
    ctx.active = 0;
    const double e = run_term(ctx, t);
    if (analytic) rep.gradient += w * term_grad;
    switch (t) {
      case Term::collision: rep.g_c = e; rep.collision_pairs = ctx.active; break;
      case Term::gravity: rep.g_h = e; rep.gravity_violations = ctx.active; break;
      case Term::relation: rep.g_r = e; rep.relation_vertices = ctx.active; break;
    }
  }
  rep.weighted = cfg.lambda_c * rep.g_c + cfg.lambda_h * rep.g_h + cfg.lambda_r * rep.g_r;
  if (cfg.grad_mode == GradMode::finite_difference) {
    rep.gradient = central_differences(scene, cfg.fd_step, [&](const Scene& s) { return weighted_energy(s, cfg); });
  }
  for (int i = 0; i < rep.gradient.rows(); ++i) {
    if (rep.gradient.row(i).allFinite()) continue;
    if (strict) throw NonFiniteGradient("guidance gradient of object " + std::to_string(i) + " is not finite");
    log_warn("non-finite guidance gradient for object " + std::to_string(i) + "; row zeroed");
    rep.gradient.row(i).setZero();
    ++rep.nonfinite_rows;
  }
  return rep;
}

std::vector<std::int64_t> guidance_signature(const Scene& scene, Term term, const GuidanceConfig& cfg) {
  Context ctx(scene, cfg);
  Signature sig;
  ctx.sig = &sig;
  run_term(ctx, term);
  return sig;
}

}  // namespace scenediff
