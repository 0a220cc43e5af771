#include "scenediff/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenediff/geom/bvh.hpp"
#include "scenediff/geom/triangle.hpp"
#include "scenediff/schedule.hpp"

namespace scenediff::reference {

std::vector<std::pair<int, int>> box_overlap_pairs(const TriMesh& a, const TriMesh& b) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < a.num_faces(); ++i) {
    const Aabb bi = a.face_bounds(i).padded(geom::kFaceBoxPad);
    for (std::size_t j = 0; j < b.num_faces(); ++j) {
      if (bi.overlaps(b.face_bounds(j).padded(geom::kFaceBoxPad))) {
        out.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return out;
}

std::vector<geom::CollisionPair> collision_pairs(const std::vector<TriMesh>& meshes) {
  std::vector<geom::CollisionPair> out;
  for (std::size_t a = 0; a < meshes.size(); ++a) {
    for (std::size_t b = a + 1; b < meshes.size(); ++b) {
      for (std::size_t fa = 0; fa < meshes[a].num_faces(); ++fa) {
        for (std::size_t fb = 0; fb < meshes[b].num_faces(); ++fb) {
          if (geom::tri_tri_intersect(meshes[a].triangle(fa), meshes[b].triangle(fb))) {
            out.push_back({static_cast<int>(a), static_cast<int>(fa), static_cast<int>(b), static_cast<int>(fb)});
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> signed_chamfer(const geom::SurfaceSample& points, const geom::SurfaceSample& others) {
  std::vector<double> out(points.size(), geom::kNoOtherSentinel);
  if (others.empty()) return out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < others.size(); ++j) {
      const double d = (points.points[i] - others.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    const double side = others.normals[arg].dot(points.points[i] - others.points[arg]);
    out[i] = side < 0.0 ? -std::sqrt(best) : std::sqrt(best);
  }
  return out;
}

Matrix ddpm_step(const Matrix& x_t, int t, const Matrix& eps_hat, const NoiseSchedule& schedule, const Matrix& z,
                 double clip_x0) {
  const double beta = schedule.beta(t);
  const double alpha = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double sigma = std::sqrt(schedule.posterior_variance(t));
  Matrix out(x_t.rows(), x_t.cols());
  for (int i = 0; i < x_t.rows(); ++i) {
    for (int j = 0; j < x_t.cols(); ++j) {
      double mean;
      if (clip_x0 > 0.0) {
        double x0 = (x_t(i, j) - std::sqrt(1.0 - ab) * eps_hat(i, j)) / std::sqrt(ab);
        x0 = std::min(std::max(x0, -clip_x0), clip_x0);
        mean = (std::sqrt(ab_prev) * beta / (1.0 - ab)) * x0 + (std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab)) * x_t(i, j);
      } else {
        mean = (x_t(i, j) - (beta / std::sqrt(1.0 - ab)) * eps_hat(i, j)) / std::sqrt(alpha);
      }
      out(i, j) = t > 1 ? mean + sigma * z(i, j) : mean;
    }
  }
  return out;
}

}  // namespace scenediff::reference
