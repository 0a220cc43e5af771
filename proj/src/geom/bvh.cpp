#include "scenediff/geom/bvh.hpp"

#include <algorithm>

#include "scenediff/errors.hpp"

namespace scenediff::geom {

Bvh::Bvh(const TriMesh& mesh) {
  if (mesh.empty()) throw EmptyMesh("cannot build a BVH over an empty mesh");
  const int nf = static_cast<int>(mesh.num_faces());
  face_boxes_.reserve(nf);
  centroids_.reserve(nf);
  order_.resize(nf);
  for (int f = 0; f < nf; ++f) {
    face_boxes_.push_back(mesh.face_bounds(f).padded(kFaceBoxPad));
    const auto t = mesh.triangle(f);
    centroids_.push_back((t[0] + t[1] + t[2]) / 3.0);
    order_[f] = f;
  }
  nodes_.reserve(2 * (nf / kLeafCapacity + 1));
  build(0, nf);
}

int Bvh::build(int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, centroid_box;
  for (int i = first; i < first + count; ++i) {
    box.extend(face_boxes_[order_[i]]);
    centroid_box.extend(centroids_[order_[i]]);
  }
  nodes_[index].box = box;
  nodes_[index].first = first;
  nodes_[index].count = count;
  if (count <= kLeafCapacity) return index;
  int axis = 0;
  centroid_box.extent().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     if (centroids_[a][axis] != centroids_[b][axis]) return centroids_[a][axis] < centroids_[b][axis];
                     return a < b;
                   });
  const int left = build(first, mid - first);
  const int right = build(mid, first + count - mid);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::vector<std::pair<int, int>> Bvh::overlapping_faces(const Bvh& other) const {
  std::vector<std::pair<int, int>> out;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const Node& a = nodes_[ia];
    const Node& b = other.nodes_[ib];
    if (!a.box.overlaps(b.box)) continue;
    if (a.leaf() && b.leaf()) {
      for (int i = a.first; i < a.first + a.count; ++i) {
        for (int j = b.first; j < b.first + b.count; ++j) {
          const int fa = order_[i];
          const int fb = other.order_[j];
          if (face_boxes_[fa].overlaps(other.face_boxes_[fb])) out.emplace_back(fa, fb);
        }
      }
    } else if (b.leaf() || (!a.leaf() && a.count >= b.count)) {
      stack.emplace_back(a.left, ib);
      stack.emplace_back(a.right, ib);
    } else {
      stack.emplace_back(ia, b.left);
      stack.emplace_back(ia, b.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scenediff::geom
