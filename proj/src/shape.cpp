#include "scenediff/shape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "scenediff/errors.hpp"
#include "scenediff/geom/sampling.hpp"

namespace scenediff {

namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace

TriMesh canonical_face_order(const TriMesh& mesh) {
  std::vector<std::array<Vec3, 3>> tris;
  tris.reserve(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    auto t = mesh.triangle(f);
    int first = 0;
    for (int k = 1; k < 3; ++k) {
      if (lex_less(t[k], t[first])) first = k;
    }
    std::rotate(t.begin(), t.begin() + first, t.end());
    tris.push_back(t);
  }
  std::sort(tris.begin(), tris.end(), [](const auto& a, const auto& b) {
    for (int k = 0; k < 3; ++k) {
      if (lex_less(a[k], b[k])) return true;
      if (lex_less(b[k], a[k])) return false;
    }
    return false;
  });
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  for (const auto& t : tris) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), t.begin(), t.end());
    faces.push_back({base, base + 1, base + 2});
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

ShapeDescriptor shape_descriptor(const TriMesh& mesh) {
  if (mesh.empty()) throw EmptyMesh("shape descriptor of an empty mesh");
  const TriMesh canon = canonical_face_order(mesh);
  const Vec3 extent = canon.bounds().extent();
  const geom::SurfaceSample sample = geom::sample_surface(canon, kDescriptorSamples, kDescriptorSeed);

  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : sample.points) mean += p;
  mean /= static_cast<double>(sample.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : sample.points) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(sample.size());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues().cwiseMax(0.0);  // ascending

  return {extent.x(), extent.y(), extent.z(), canon.surface_area(), std::abs(canon.volume()),
          std::sqrt(ev[2]), std::sqrt(ev[1]), std::sqrt(ev[0])};
}

}  // namespace scenediff
