#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "gen.hpp"
#include "scenediff/errors.hpp"
#include "scenediff/geom/bvh.hpp"
#include "scenediff/geom/chamfer.hpp"
#include "scenediff/geom/collision.hpp"
#include "scenediff/geom/hull2d.hpp"
#include "scenediff/geom/mesh_distance.hpp"
#include "scenediff/geom/sampling.hpp"
#include "scenediff/geom/triangle.hpp"
#include "scenediff/geom/vertical_gap.hpp"
#include "scenediff/reference.hpp"

using namespace scenediff;
using namespace scenediff::geom;

namespace {

// Independent oracle: segment [p, q] crosses the closed triangle (Moller-Trumbore).
bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Triangle& t) {
  const Vec3 d = q - p;
  const Vec3 e1 = t[1] - t[0], e2 = t[2] - t[0];
  const Vec3 h = d.cross(e2);
  const double a = e1.dot(h);
  if (std::abs(a) < 1e-14) return false;
  const Vec3 s = p - t[0];
  const double u = s.dot(h) / a;
  if (u < 0 || u > 1) return false;
  const Vec3 qv = s.cross(e1);
  const double v = d.dot(qv) / a;
  if (v < 0 || u + v > 1) return false;
  const double w = e2.dot(qv) / a;
  return w >= 0 && w <= 1;
}

// For triangles in general position, they intersect iff an edge of one crosses the other.
bool edges_cross(const Triangle& a, const Triangle& b) {
  for (int k = 0; k < 3; ++k) {
    if (segment_hits_triangle(a[k], a[(k + 1) % 3], b)) return true;
    if (segment_hits_triangle(b[k], b[(k + 1) % 3], a)) return true;
  }
  return false;
}

TriMesh posed_box(const Vec3& size, const Vec3& at, const Mat3& r = Mat3::Identity()) {
  return make_box(size).transformed(r, at);
}

double cube_sdf(const Vec3& p, double half) {
  const Vec3 q = p.cwiseAbs() - Vec3::Constant(half);
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

}  // namespace

TEST_CASE("tri_tri_intersect examples") {
  const Triangle base{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const Triangle parallel{Vec3(0, 0, 0.1), Vec3(1, 0, 0.1), Vec3(0, 1, 0.1)};
  CHECK_FALSE(tri_tri_intersect(base, parallel));

  const Triangle piercing{Vec3(0.2, 0.2, -0.5), Vec3(0.3, 0.2, 0.5), Vec3(0.25, 0.9, 0.5)};
  CHECK(segment_hits_triangle(piercing[0], piercing[1], base));
  CHECK(tri_tri_intersect(base, piercing));

  const Triangle shared_vertex{Vec3(1, 0, 0), Vec3(2, 0, 1), Vec3(2, 1, -1)};
  CHECK(tri_tri_intersect(base, shared_vertex));

  const Triangle coplanar_overlap{Vec3(0.2, 0.2, 0), Vec3(1.2, 0.2, 0), Vec3(0.2, 1.2, 0)};
  CHECK(tri_tri_intersect(base, coplanar_overlap));
  const Triangle coplanar_apart{Vec3(2, 2, 0), Vec3(3, 2, 0), Vec3(2, 3, 0)};
  CHECK_FALSE(tri_tri_intersect(base, coplanar_apart));

  const Triangle degenerate{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  CHECK_THROWS_AS(tri_tri_intersect(base, degenerate), DegenerateTriangle);
}

TEST_CASE("property: tri_tri_intersect matches the edge-crossing oracle") {
  gen::Rng rng(101);
  int hits = 0;
  for (int k = 0; k < 20000; ++k) {
    Triangle a{gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1)};
    Triangle b{gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1)};
    const bool oracle = edges_cross(a, b);
    hits += oracle;
    REQUIRE(tri_tri_intersect(a, b) == oracle);
    REQUIRE(tri_tri_intersect(b, a) == oracle);
    REQUIRE((triangle_distance(a, b) == 0.0) == oracle);
  }
  CHECK(hits > 1000);
}

TEST_CASE("property: triangle distance is symmetric and bounded by vertex distances") {
  gen::Rng rng(7);
  for (int k = 0; k < 2000; ++k) {
    Triangle a{gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1), gen::vec3(rng, -1, 1)};
    Triangle b{gen::vec3(rng, 1, 3), gen::vec3(rng, 1, 3), gen::vec3(rng, 1, 3)};
    const double d = triangle_distance(a, b);
    REQUIRE(std::abs(d - triangle_distance(b, a)) < 1e-12);
    for (const Vec3& v : a) REQUIRE(d <= point_triangle_distance(v, b) + 1e-12);
    for (const Vec3& v : b) REQUIRE(d <= point_triangle_distance(v, a) + 1e-12);
  }
}

TEST_CASE("BVH structure") {
  const TriMesh single({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  Bvh one(single);
  REQUIRE(one.nodes().size() == 1);
  CHECK(one.nodes()[0].leaf());
  CHECK_THROWS_AS(Bvh{TriMesh()}, EmptyMesh);

  const TriMesh a = posed_box({1, 1, 1}, {0, 0, 0});
  const TriMesh b = posed_box({1, 1, 1}, {5, 0, 0});
  CHECK(Bvh(a).overlapping_faces(Bvh(b)).empty());
}

TEST_CASE("property: BVH candidates equal brute-force box overlaps") {
  gen::Rng rng(3);
  const TriMesh big = gen::blob(rng, 21, 25);
  REQUIRE(big.num_faces() == 1000);
  for (int k = 0; k < 10; ++k) {
    const TriMesh a = big.transformed(gen::rotation(rng), gen::vec3(rng, -0.5, 0.5));
    const TriMesh b = gen::blob(rng, 8, 10).transformed(gen::rotation(rng), gen::vec3(rng, -1, 1));
    const auto fast = Bvh(a).overlapping_faces(Bvh(b));
    const auto slow = reference::box_overlap_pairs(a, b);
    REQUIRE(std::is_sorted(fast.begin(), fast.end()));
    REQUIRE(std::set(fast.begin(), fast.end()) == std::set(slow.begin(), slow.end()));
    REQUIRE(fast.size() == slow.size());
  }
}

TEST_CASE("collision pairs examples") {
  CHECK(find_collision_pairs({posed_box({1, 1, 1}, {0, 0, 0}), posed_box({1, 1, 1}, {3, 0, 0})}).empty());

  const std::vector<TriMesh> overlap{posed_box({1, 1, 1}, {0, 0, 0}), posed_box({1, 1, 1}, {0.5, 0.1, 0.2})};
  const auto pairs = find_collision_pairs(overlap);
  CHECK_FALSE(pairs.empty());
  CHECK(pairs == reference::collision_pairs(overlap));

  // Closed-set convention: a cube resting exactly on a slab touches it.
  const std::vector<TriMesh> resting{posed_box({4, 1, 4}, {0, -0.5, 0}), posed_box({1, 1, 1}, {0, 0.5, 0})};
  const auto touching = find_collision_pairs(resting);
  CHECK_FALSE(touching.empty());
  CHECK(touching == reference::collision_pairs(resting));
}

TEST_CASE("property: collision pairs equal the O(F^2) scan") {
  gen::Rng rng(17);
  int nonempty = 0;
  for (int k = 0; k < 40; ++k) {
    std::vector<TriMesh> meshes;
    const int n = gen::integer(rng, 2, 4);
    for (int i = 0; i < n; ++i) {
      meshes.push_back(gen::blob(rng, 5, 6).transformed(gen::rotation(rng), gen::vec3(rng, -1.2, 1.2)));
    }
    const auto fast = find_collision_pairs(meshes);
    nonempty += !fast.empty();
    REQUIRE(fast == reference::collision_pairs(meshes));
    for (const auto& p : fast) REQUIRE(p.obj_a < p.obj_b);
  }
  CHECK(nonempty > 10);
}

TEST_CASE("surface sampling") {
  const TriMesh cube = make_box({1, 1, 1});
  const SurfaceSample s = sample_surface(cube, 2000, 42);
  REQUIRE(s.size() == 2000);
  std::vector<int> counts(cube.num_faces(), 0);
  for (int f : s.source_face) ++counts[f];
  const double p = 1.0 / 12.0;
  const double mean = 2000 * p, sigma = std::sqrt(2000 * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - mean) < 5 * sigma);
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(std::abs(cube_sdf(s.points[k], 0.5)) < 1e-12);
    CHECK((s.normals[k] - cube.normals()[s.source_face[k]]).norm() == 0.0);
  }

  const SurfaceSample one = sample_surface(cube, 1, 1);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(cube_sdf(one.points[0], 0.5)) < 1e-12);

  const SurfaceSample again = sample_surface(cube, 2000, 42);
  CHECK(again.points == s.points);
  CHECK(again.source_face == s.source_face);
  CHECK_THROWS_AS(sample_surface(TriMesh(), 10, 0), EmptyMesh);
  CHECK_THROWS_AS(sample_surface(cube, 0, 0), Error);
}

TEST_CASE("property: sample counts are area proportional on uneven meshes") {
  gen::Rng rng(8);
  const TriMesh slab = make_box({4, 0.5, 1});
  const SurfaceSample s = sample_surface(slab, 20000, 3);
  std::vector<int> counts(slab.num_faces(), 0);
  for (int f : s.source_face) ++counts[f];
  for (std::size_t f = 0; f < slab.num_faces(); ++f) {
    const double p = slab.face_area(f) / slab.surface_area();
    const double mean = 20000 * p, sigma = std::sqrt(20000 * p * (1 - p));
    CHECK(std::abs(counts[f] - mean) < 5 * sigma);
  }
}

TEST_CASE("signed Chamfer examples") {
  const TriMesh cube = make_box({1, 1, 1});
  const SurfaceSample dense = sample_surface(cube, 40000, 5);
  auto single = [](const Vec3& p) {
    SurfaceSample s;
    s.points = {p};
    s.normals = {Vec3::UnitY()};
    s.source_face = {0};
    return s;
  };
  CHECK(signed_chamfer(single({1.5, 0.1, -0.1}), dense)[0] == doctest::Approx(1.0).epsilon(0.01));
  CHECK(signed_chamfer(single({0.1, -0.05, 0.3}), dense)[0] == doctest::Approx(-0.2).epsilon(0.05));
  CHECK(signed_chamfer(single(dense.points[123]), dense)[0] == 0.0);
  CHECK(signed_chamfer(single({0, 0, 0}), SurfaceSample{})[0] == kNoOtherSentinel);
}

TEST_CASE("property: signed Chamfer and nearest neighbours match brute force") {
  gen::Rng rng(23);
  for (int k = 0; k < 10; ++k) {
    const TriMesh a = gen::blob(rng, 6, 7).transformed(gen::rotation(rng), gen::vec3(rng, -1, 1));
    const TriMesh b = gen::blob(rng, 6, 7).transformed(gen::rotation(rng), gen::vec3(rng, -1, 1));
    const SurfaceSample sa = sample_surface(a, 500, k);
    const SurfaceSample sb = sample_surface(b, 700, k + 100);
    REQUIRE(signed_chamfer(sa, sb) == reference::signed_chamfer(sa, sb));

    const PointGrid grid(sb.points);
    const auto hits = nearest_neighbors(sa.points, grid);
    for (std::size_t i = 0; i < sa.size(); ++i) {
      double best = 1e300;
      int arg = -1;
      for (std::size_t j = 0; j < sb.size(); ++j) {
        const double d = (sa.points[i] - sb.points[j]).norm();
        if (d < best) best = d, arg = static_cast<int>(j);
      }
      REQUIRE(hits[i].index == arg);
      REQUIRE(hits[i].distance == best);
    }
  }
}

TEST_CASE("property: overlapped blobs have negative Chamfer samples on both sides") {
  const TriMesh a = make_box({1, 1, 1});
  const TriMesh b = make_box({1, 1, 1}).transformed(Mat3::Identity(), {0.4, 0.1, 0});
  const TriMesh far = make_box({1, 1, 1}).transformed(Mat3::Identity(), {4, 0, 0});
  const SurfaceSample sa = sample_surface(a, 1000, 1), sb = sample_surface(b, 1000, 2), sf = sample_surface(far, 1000, 3);
  auto negatives = [](const std::vector<double>& d) { return std::count_if(d.begin(), d.end(), [](double x) { return x < 0; }); };
  CHECK(negatives(signed_chamfer(sa, sb)) > 0);
  CHECK(negatives(signed_chamfer(sb, sa)) > 0);
  CHECK(negatives(signed_chamfer(sa, sf)) == 0);
}

TEST_CASE("XZ hull examples") {
  const Hull2D square = xz_hull(make_box({1, 1, 1}));
  REQUIRE(square.size() == 4);
  CHECK(square.area() == doctest::Approx(1.0));
  for (const Vec2& v : square.vertices) CHECK(v.cwiseAbs().isApprox(Vec2(0.5, 0.5)));

  const double pi = std::acos(-1.0);
  const Hull2D diamond = xz_hull(make_box({1, 1, 1}).transformed(yaw_matrix(pi / 4), Vec3::Zero()));
  REQUIRE(diamond.size() == 4);
  for (const Vec2& v : diamond.vertices) {
    CHECK(v.cwiseAbs().maxCoeff() == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(v.cwiseAbs().minCoeff() < 1e-12);
  }
  CHECK(polygon_area(diamond.vertices) > 0);
}

TEST_CASE("property: hull contains its input and uses input vertices") {
  gen::Rng rng(31);
  for (int k = 0; k < 100; ++k) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({gen::normal(rng), gen::normal(rng)});
    const Hull2D h = convex_hull(pts);
    REQUIRE(polygon_area(h.vertices) > 0);
    for (std::size_t i = 0; i < h.size(); ++i) REQUIRE(h.vertices[i] == pts[h.indices[i]]);
    for (const Vec2& p : pts) {
      REQUIRE(h.contains(p));
      REQUIRE(point_to_hull_distance(p, h) == 0.0);
    }
  }
}

TEST_CASE("point to hull distance examples") {
  const Hull2D unit = convex_hull(std::vector<Vec2>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(point_to_hull_distance({0.5, 0.5}, unit) == 0.0);
  int edge = 99;
  CHECK(point_to_hull_distance({2, 0.5}, unit, &edge) == doctest::Approx(1.0));
  CHECK(edge >= 0);
  CHECK(point_to_hull_distance({2, 2}, unit) == doctest::Approx(std::sqrt(2.0)));
  CHECK(point_to_hull_distance({0.5, 0.5}, unit, &edge) == 0.0);
  CHECK(edge == -1);
}

TEST_CASE("convex clipping") {
  const std::vector<Vec2> a{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  const std::vector<Vec2> b{{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  CHECK(polygon_area(clip_convex(a, b)) == doctest::Approx(1.0));
  const std::vector<Vec2> far{{5, 5}, {6, 5}, {6, 6}};
  CHECK(std::abs(polygon_area(clip_convex(a, far))) < 1e-12);
}

TEST_CASE("vertical gap examples") {
  const TriMesh lower = posed_box({1, 1, 1}, {0, 0.5, 0});
  CHECK(vertical_gap(posed_box({1, 1, 1}, {0.2, 1.8, 0.1}), lower) == doctest::Approx(0.3));
  CHECK(std::abs(vertical_gap(posed_box({1, 1, 1}, {0.2, 1.5, 0.1}), lower)) < 1e-12);
  CHECK(vertical_gap(posed_box({0.5, 0.5, 0.5}, {0.1, 1.2, 0}), lower) == doctest::Approx(-0.05));
  CHECK(vertical_gap(posed_box({1, 1, 1}, {3, 1.8, 0}), lower) == kNoOverlapGap);
}

TEST_CASE("property: vertical gap of stacked boxes equals their offset") {
  gen::Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    const Vec3 sl = gen::vec3(rng, 0.5, 2), su = gen::vec3(rng, 0.2, 1);
    const double d = gen::uniform(rng, -0.1, 0.5);
    const Vec3 pl(gen::uniform(rng, -1, 1), sl.y() / 2, gen::uniform(rng, -1, 1));
    const Vec3 pu(pl.x() + gen::uniform(rng, -0.2, 0.2), sl.y() + d + su.y() / 2, pl.z() + gen::uniform(rng, -0.2, 0.2));
    const TriMesh lower = posed_box(sl, pl), upper = posed_box(su, pu);
    const GapWitness w = vertical_gap_witness(upper, lower);
    REQUIRE(w.found());
    REQUIRE(std::abs(w.gap - d) < 1e-9);
    const double again = vertical_gap_from_witness<double>(w, upper.vertices(), upper.faces(), lower.vertices(), lower.faces());
    REQUIRE(again == doctest::Approx(w.gap));
  }
}

TEST_CASE("property: contact gap of a tilted box over a slab is its lowest corner height") {
  gen::Rng rng(14);
  const TriMesh lower = posed_box({3, 1, 3}, {0, 0.5, 0});
  for (int k = 0; k < 100; ++k) {
    const double d = gen::uniform(rng, -0.05, 0.3);
    const TriMesh tilted = posed_box(gen::vec3(rng, 0.2, 0.6), Vec3::Zero(), gen::tilt(rng, 0.4));
    const TriMesh upper = tilted.transformed(Mat3::Identity(), Vec3(gen::uniform(rng, -0.5, 0.5), 1.0 + d - tilted.bounds().lo.y(),
                                                                    gen::uniform(rng, -0.5, 0.5)));
    REQUIRE(std::abs(contact_gap(upper, lower) - d) < 1e-9);
    REQUIRE(vertical_gap(upper, lower) >= d - 1e-9);
  }
}

TEST_CASE("winding number and point-mesh distance") {
  gen::Rng rng(19);
  const TriMesh cube = make_box({1, 1, 1});
  for (int k = 0; k < 500; ++k) {
    const Vec3 p = gen::vec3(rng, -1, 1);
    const double sdf = cube_sdf(p, 0.5);
    if (std::abs(sdf) < 1e-6) continue;
    REQUIRE(winding_number(p, cube) == doctest::Approx(sdf < 0 ? 1.0 : 0.0));
    REQUIRE(point_mesh_distance(p, cube) == doctest::Approx(std::abs(sdf)));
    REQUIRE(signed_point_mesh_distance(p, cube) == doctest::Approx(sdf));
  }
  const TriMesh b = gen::blob(rng, 7, 9);
  CHECK(winding_number(Vec3::Zero(), b) == doctest::Approx(1.0));
  CHECK(winding_number(Vec3(3, 0, 0), b) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mesh-mesh distance") {
  const TriMesh a = posed_box({1, 1, 1}, {0, 0, 0});
  CHECK(mesh_mesh_distance(a, posed_box({1, 1, 1}, {1.3, 0, 0}), 1.0) == doctest::Approx(0.3));
  CHECK(mesh_mesh_distance(a, posed_box({1, 1, 1}, {0.9, 0, 0}), 1.0) == 0.0);
  CHECK(mesh_mesh_distance(a, posed_box({1, 1, 1}, {5, 0, 0}), 0.1) > 0.1);
}
