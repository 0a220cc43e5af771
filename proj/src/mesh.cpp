#include "scenediff/mesh.hpp"

#include <string>

#include "scenediff/errors.hpp"

namespace scenediff {

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int nv = static_cast<int>(vertices_.size());
  normals_.reserve(faces_.size());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    for (int idx : faces_[f]) {
      if (idx < 0 || idx >= nv) {
        throw InvalidMesh("face " + std::to_string(f) + " references vertex " +
                          std::to_string(idx) + " of " + std::to_string(nv));
      }
    }
    const auto [a, b, c] = triangle(f);
    const Vec3 n = (b - a).cross(c - a);
    const double twice_area = n.norm();
    if (!(0.5 * twice_area > 1e-12)) {
      throw InvalidMesh("face " + std::to_string(f) + " is degenerate");
    }
    normals_.push_back(n / twice_area);
  }
}

double TriMesh::face_area(std::size_t f) const {
  const auto [a, b, c] = triangle(f);
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriMesh::surface_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces_.size(); ++f) total += face_area(f);
  return total;
}

double TriMesh::volume() const {
  double six_v = 0.0;
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto [a, b, c] = triangle(f);
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

Vec3 TriMesh::center_of_mass() const {
  double six_v = 0.0;
  Vec3 acc = Vec3::Zero();
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto [a, b, c] = triangle(f);
    const double w = a.dot(b.cross(c));
    six_v += w;
    acc += w * (a + b + c) / 4.0;
  }
  if (std::abs(six_v) < 1e-15) return vertex_mean();
  return acc / six_v;
}

Vec3 TriMesh::vertex_mean() const {
  Vec3 acc = Vec3::Zero();
  for (const Vec3& v : vertices_) acc += v;
  return vertices_.empty() ? acc : Vec3(acc / static_cast<double>(vertices_.size()));
}

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const Vec3& v : vertices_) box.extend(v);
  return box;
}

Aabb TriMesh::face_bounds(std::size_t f) const {
  Aabb box;
  for (int idx : faces_[f]) box.extend(vertices_[idx]);
  return box;
}

TriMesh TriMesh::transformed(const Mat3& rotation, const Vec3& translation) const {
  TriMesh out;
  out.faces_ = faces_;
  out.vertices_.reserve(vertices_.size());
  for (const Vec3& v : vertices_) out.vertices_.push_back(rotation * v + translation);
  out.normals_.reserve(normals_.size());
  for (const Vec3& n : normals_) out.normals_.push_back(rotation * n);
  return out;
}

}  // namespace scenediff
