#include "scenediff/geom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scenediff/errors.hpp"

namespace scenediff::geom {

SurfaceSample sample_surface(const TriMesh& mesh, int count, std::uint64_t seed) {
  if (mesh.empty()) throw EmptyMesh("cannot sample an empty mesh");
  if (count < 1) throw Error("sample count must be >= 1");

  std::vector<double> cumulative(mesh.num_faces());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  SurfaceSample out;
  out.points.reserve(count);
  out.normals.reserve(count);
  out.source_face.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double target = uniform(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const int f = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                            static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const double s = std::sqrt(uniform(rng));
    const double u = uniform(rng);
    const auto t = mesh.triangle(f);
    out.points.push_back((1.0 - s) * t[0] + s * (1.0 - u) * t[1] + s * u * t[2]);
    out.normals.push_back(mesh.normals()[f]);
    out.source_face.push_back(f);
  }
  return out;
}

SurfaceSample merge_samples(std::span<const SurfaceSample> samples) {
  SurfaceSample out;
  for (const SurfaceSample& s : samples) {
    out.points.insert(out.points.end(), s.points.begin(), s.points.end());
    out.normals.insert(out.normals.end(), s.normals.begin(), s.normals.end());
    out.source_face.insert(out.source_face.end(), s.source_face.begin(), s.source_face.end());
  }
  return out;
}

}  // namespace scenediff::geom
