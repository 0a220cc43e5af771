#pragma once

#include <utility>
#include <vector>

#include "scenediff/mesh.hpp"

namespace scenediff::geom {

/// Face boxes are padded by this amount so that exactly touching faces are
/// never pruned by round-off.
inline constexpr double kFaceBoxPad = 1e-9;

/// Binary AABB tree over the faces of one (world-frame) mesh.
class Bvh {
 public:
  static constexpr int kLeafCapacity = 4;

  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int first = 0;  // into face_order() for leaves
    int count = 0;
    bool leaf() const { return left < 0; }
  };

  /// Throws EmptyMesh.
  explicit Bvh(const TriMesh& mesh);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& face_order() const { return order_; }
  const Aabb& face_box(int f) const { return face_boxes_[f]; }
  const Aabb& bounds() const { return nodes_.front().box; }

  /// Every (face of this, face of other) whose padded boxes overlap, sorted
  /// and duplicate-free.
  std::vector<std::pair<int, int>> overlapping_faces(const Bvh& other) const;

 private:
  int build(int first, int count);

  std::vector<Aabb> face_boxes_;
  std::vector<Vec3> centroids_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace scenediff::geom
