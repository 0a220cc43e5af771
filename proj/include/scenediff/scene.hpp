#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scenediff/mesh.hpp"
#include "scenediff/rotation.hpp"

namespace scenediff {

enum class SpatialRel : std::uint8_t { none, left_of, right_of, in_front_of, behind, above, below };
enum class PhysicalRel : std::uint8_t { none, support, contact, attach };

inline constexpr int kSpatialLabelCount = 7;   // including none
inline constexpr int kPhysicalLabelCount = 4;  // including none

std::string_view to_string(SpatialRel r);
std::string_view to_string(PhysicalRel r);
/// Throw UnknownLabel for anything outside the enumerations.
SpatialRel parse_spatial(std::string_view s);
PhysicalRel parse_physical(std::string_view s);
SpatialRel opposite(SpatialRel r);

/// Dense N x N label matrix.
template <class Label>
class LabelMatrix {
 public:
  LabelMatrix() = default;
  explicit LabelMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, Label::none) {}

  int size() const { return n_; }
  Label& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  Label operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  bool operator==(const LabelMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<Label> data_;
};

/// Spatial relations rho and physical relations kappa between objects.
///
/// spatial(i, j) = left_of reads "i is left of j". physical(i, j) = support
/// reads "i is supported by j"; contact is stored symmetrically.
struct RelationGraphs {
  LabelMatrix<SpatialRel> spatial;
  LabelMatrix<PhysicalRel> physical;

  RelationGraphs() = default;
  explicit RelationGraphs(int n) : spatial(n), physical(n) {}

  int size() const { return spatial.size(); }
  bool operator==(const RelationGraphs&) const = default;

  /// Throws GraphSizeMismatch / Error describing the first violated invariant:
  /// none diagonal, opposite-pair spatial consistency, acyclic support.
  void validate() const;

  /// First j with physical(i, j) == support, or -1.
  int supporter_of(int i) const;
};

inline constexpr std::size_t kShapeDescriptorSize = 8;
using ShapeDescriptor = std::array<double, kShapeDescriptorSize>;

struct SceneObject {
  int id = 0;
  std::string category;
  std::shared_ptr<const TriMesh> mesh;
  Vec3 position = Vec3::Zero();
  Rot6 rotation = (Rot6() << 1, 0, 0, 0, 1, 0).finished();
  ShapeDescriptor shape_desc{};
};

struct Scene {
  std::vector<SceneObject> objects;
  RelationGraphs graphs;
  double floor_height = 0.0;

  int size() const { return static_cast<int>(objects.size()); }
  /// Ids dense in [0, N) and in order, graph size N, graph invariants.
  void validate() const;
};

inline constexpr int kStateWidth = 9;

/// Row j = [p_j || r_j], in id order.
Matrix flatten_scene(const Scene& scene);
/// Copy of the template with poses replaced by the rows of x. Meshes and
/// graphs are shared untouched. Throws ShapeMismatch / NonFiniteState.
Scene unflatten(const Matrix& x, const Scene& scene_template);

/// World-frame mesh: v' = R v + p. Throws DegenerateRotation.
TriMesh posed_mesh(const SceneObject& obj);
/// Same, but decodes degenerate rotations to identity (noisy states).
TriMesh posed_mesh_lenient(const SceneObject& obj);
std::vector<TriMesh> posed_meshes_lenient(const Scene& scene);

}  // namespace scenediff
