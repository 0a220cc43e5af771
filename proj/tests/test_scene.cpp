#include "doctest.h"

#include <cmath>
#include <set>

#include "gen.hpp"
#include "scenediff/errors.hpp"
#include "scenediff/scene_io.hpp"

using namespace scenediff;

namespace {

const double kPi = std::acos(-1.0);

std::set<std::array<long, 3>> rounded_vertex_set(const TriMesh& m) {
  std::set<std::array<long, 3>> out;
  for (const Vec3& v : m.vertices()) {
    out.insert({std::lround(v.x() * 1e9), std::lround(v.y() * 1e9), std::lround(v.z() * 1e9)});
  }
  return out;
}

}  // namespace

TEST_CASE("rot6d canonical basis decodes to identity") {
  Rot6 r;
  r << 1, 0, 0, 0, 1, 0;
  CHECK((rot6d_to_matrix(r) - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  r << 2, 0, 0, 0, 3, 0;
  CHECK((rot6d_to_matrix(r) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rot6d degenerate inputs") {
  Rot6 parallel;
  parallel << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(parallel), DegenerateRotation);
  Rot6 zero = Rot6::Zero();
  CHECK_THROWS_AS(rot6d_to_matrix(zero), DegenerateRotation);
  CHECK(rot6d_to_matrix_or_identity(zero) == Mat3::Identity());
}

TEST_CASE("matrix_to_rot6d examples") {
  Rot6 id = matrix_to_rot6d(Mat3::Identity());
  CHECK(id == (Rot6() << 1, 0, 0, 0, 1, 0).finished());
  Rot6 yaw = matrix_to_rot6d(yaw_matrix(kPi / 2));
  Rot6 expect;
  expect << 0, 0, -1, 0, 1, 0;
  CHECK((yaw - expect).cwiseAbs().maxCoeff() < 1e-15);
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 2;
  CHECK_THROWS_AS(matrix_to_rot6d(bad), NotARotation);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  CHECK_THROWS_AS(matrix_to_rot6d(reflect), NotARotation);
}

TEST_CASE("property: rot6d decodes noise to SO(3) and round-trips rotations") {
  gen::Rng rng(11);
  for (int k = 0; k < 2000; ++k) {
    const Mat3 r = rot6d_to_matrix(gen::rot6_noise(rng));
    REQUIRE(orthonormality_error(r) < 1e-12);
    REQUIRE(r.determinant() > 0);
    const Mat3 q = gen::rotation(rng);
    REQUIRE((rot6d_to_matrix(matrix_to_rot6d(q)) - q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("flatten and unflatten") {
  auto mesh = gen::box({1, 1, 1});
  Scene one = gen::scene({gen::object(0, mesh, Vec3::Zero())});
  Matrix x = flatten_scene(one);
  REQUIRE(x.rows() == 1);
  REQUIRE(x.cols() == 9);
  Matrix expect(1, 9);
  expect << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  CHECK(x == expect);

  Scene three = gen::scene({gen::object(0, mesh, {-3, 0.5, 0}), gen::object(1, mesh, {0, 0.5, 0}),
                            gen::object(2, mesh, {3, 0.5, 0})});
  Matrix x3 = flatten_scene(three);
  CHECK(x3.rows() == 3);
  CHECK(x3(0, 0) == -3);
  CHECK(x3(2, 0) == 3);

  Matrix wrong(2, 9);
  wrong.setZero();
  CHECK_THROWS_AS(unflatten(wrong, three), ShapeMismatch);
  Matrix nan = x3;
  nan(1, 4) = std::nan("");
  CHECK_THROWS_AS(unflatten(nan, three), NonFiniteState);
}

TEST_CASE("flatten round trip on a synthetic scene is bitwise") {
  GenSpec spec;
  spec.min_objects = 8;
  spec.max_objects = 8;
  const Scene s = gen_scene(spec, 3);
  const Scene back = unflatten(flatten_scene(s), s);
  for (int i = 0; i < s.size(); ++i) {
    CHECK(back.objects[i].position == s.objects[i].position);
    CHECK(back.objects[i].rotation == s.objects[i].rotation);
  }
}

TEST_CASE("posed mesh examples") {
  auto cube = gen::box({1, 1, 1});
  SceneObject o = gen::object(0, cube, {1, 2, 3});
  const TriMesh posed = posed_mesh(o);
  for (std::size_t k = 0; k < posed.num_vertices(); ++k) {
    CHECK((posed.vertices()[k] - cube->vertices()[k] - Vec3(1, 2, 3)).norm() == 0.0);
  }
  SceneObject yawed = gen::object(0, cube, Vec3::Zero(), yaw_matrix(kPi / 2));
  CHECK(rounded_vertex_set(posed_mesh(yawed)) == rounded_vertex_set(*cube));
}

TEST_CASE("property: posed vertex mean follows the pose") {
  gen::Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    auto mesh = std::make_shared<const TriMesh>(gen::blob(rng, 5, 7));
    const Mat3 r = gen::rotation(rng);
    const Vec3 p = gen::vec3(rng, -3, 3);
    const TriMesh posed = posed_mesh(gen::object(0, mesh, p, r));
    REQUIRE((posed.vertex_mean() - (r * mesh->vertex_mean() + p)).norm() < 1e-9);
  }
}

TEST_CASE("relation labels") {
  auto cube = gen::box({1, 1, 1});
  Scene s = gen::scene({gen::object(0, cube, {-2, 0.5, 0}), gen::object(1, cube, {2, 0.5, 0})});
  CHECK(s.graphs.spatial(0, 1) == SpatialRel::left_of);
  CHECK(s.graphs.spatial(1, 0) == SpatialRel::right_of);
  CHECK(spatial_label({0, 0, -1}, {0, 0, 0}) == SpatialRel::in_front_of);
  CHECK(spatial_label({0, 2, 0}, {0, 0, 0}) == SpatialRel::above);
  CHECK(spatial_label({0.01, 0, 0}, {0, 0, 0}) == SpatialRel::none);
  CHECK(spatial_label({1, 1, 1}, {0, 0, 0}) == SpatialRel::none);
  for (int k = 0; k < kSpatialLabelCount; ++k) {
    const auto r = static_cast<SpatialRel>(k);
    CHECK(parse_spatial(to_string(r)) == r);
    CHECK(opposite(opposite(r)) == r);
  }
  CHECK_THROWS_AS(parse_spatial("beside"), UnknownLabel);
  CHECK_THROWS_AS(parse_physical("glued"), UnknownLabel);
}

TEST_CASE("mug resting on a table is supported by it") {
  auto table = std::make_shared<const TriMesh>(make_table({1.2, 0.75, 0.8}, 0.05, 0.06));
  auto mug = std::make_shared<const TriMesh>(make_cylinder(0.05, 0.1));
  Scene s = gen::scene({gen::object(0, table, {0, 0.375, 0}, Mat3::Identity(), "table"),
                        gen::object(1, mug, {0.1, 0.75 + 0.005 + 0.05, 0}, Mat3::Identity(), "mug")});
  CHECK(s.graphs.physical(1, 0) == PhysicalRel::support);
  CHECK(s.graphs.physical(0, 1) == PhysicalRel::none);
  CHECK(s.graphs.supporter_of(1) == 0);
  CHECK(s.graphs.supporter_of(0) == -1);
  CHECK(s.graphs.spatial(1, 0) == SpatialRel::above);
}

TEST_CASE("relation graph validation") {
  RelationGraphs g(2);
  g.spatial(0, 1) = SpatialRel::left_of;
  CHECK_THROWS(g.validate());
  g.spatial(1, 0) = SpatialRel::right_of;
  CHECK_NOTHROW(g.validate());
  g.physical(0, 1) = PhysicalRel::support;
  g.physical(1, 0) = PhysicalRel::support;
  CHECK_THROWS(g.validate());
  RelationGraphs diag(1);
  diag.spatial(0, 0) = SpatialRel::above;
  CHECK_THROWS(diag.validate());
}

TEST_CASE("synthetic corpus annotations agree with derived relations") {
  GenSpec spec;
  int total = 0, agree = 0;
  for (int k = 0; k < 50; ++k) {
    const Scene s = gen_scene(spec, scene_seed(21, k));
    const RelationGraphs d = derive_relations(s);
    for (int i = 0; i < s.size(); ++i) {
      for (int j = 0; j < s.size(); ++j) {
        if (s.graphs.spatial(i, j) != SpatialRel::none) {
          ++total;
          agree += d.spatial(i, j) == s.graphs.spatial(i, j);
        }
        if (s.graphs.physical(i, j) != PhysicalRel::none) {
          ++total;
          agree += d.physical(i, j) == s.graphs.physical(i, j);
        }
      }
    }
  }
  CHECK(agree >= 0.99 * total);
}

TEST_CASE("shape descriptor examples") {
  const ShapeDescriptor unit = shape_descriptor(make_box({1, 1, 1}));
  CHECK(unit[0] == doctest::Approx(1.0));
  CHECK(unit[1] == doctest::Approx(1.0));
  CHECK(unit[2] == doctest::Approx(1.0));
  CHECK(unit[3] == doctest::Approx(6.0));
  CHECK(unit[4] == doctest::Approx(1.0));
  const ShapeDescriptor twice = shape_descriptor(make_box({2, 2, 2}));
  CHECK(twice[0] == doctest::Approx(2.0));
  CHECK(twice[3] == doctest::Approx(24.0));
  CHECK(twice[4] == doctest::Approx(8.0));
  CHECK_THROWS_AS(shape_descriptor(TriMesh()), EmptyMesh);
}

TEST_CASE("property: shape descriptor ignores face and vertex order") {
  gen::Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    const TriMesh m = gen::blob(rng, 4 + k % 3, 5 + k % 4);
    std::vector<Face> faces = m.faces();
    std::shuffle(faces.begin(), faces.end(), rng);
    for (Face& f : faces) std::rotate(f.begin(), f.begin() + gen::integer(rng, 0, 2), f.end());
    const std::vector<int> perm = gen::permutation(rng, static_cast<int>(m.num_vertices()));
    std::vector<Vec3> verts(m.num_vertices());
    for (std::size_t i = 0; i < perm.size(); ++i) verts[perm[i]] = m.vertices()[i];
    for (Face& f : faces) {
      for (int& v : f) v = perm[v];
    }
    REQUIRE(shape_descriptor(TriMesh(verts, faces)) == shape_descriptor(m));
  }
}

TEST_CASE("mesh validation and volume") {
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 2}}), InvalidMesh);
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), InvalidMesh);
  gen::Rng rng(2);
  const TriMesh b = gen::blob(rng, 6, 8);
  CHECK(b.volume() > 0);
  CHECK(make_box({1, 2, 3}).volume() == doctest::Approx(6.0));
}

TEST_CASE("scene JSON round trip") {
  GenSpec spec;
  for (int k = 0; k < 10; ++k) {
    const Scene s = gen_scene(spec, scene_seed(4, k));
    const nlohmann::json j = scene_to_json(s);
    const Scene back = scene_from_json(nlohmann::json::parse(j.dump()));
    REQUIRE(back.size() == s.size());
    CHECK(back.graphs == s.graphs);
    CHECK(back.floor_height == s.floor_height);
    for (int i = 0; i < s.size(); ++i) {
      CHECK(back.objects[i].category == s.objects[i].category);
      CHECK(back.objects[i].position == s.objects[i].position);
      CHECK(back.objects[i].rotation == s.objects[i].rotation);
      CHECK(back.objects[i].shape_desc == s.objects[i].shape_desc);
      CHECK(back.objects[i].mesh->vertices() == s.objects[i].mesh->vertices());
    }
    CHECK(scene_to_json(back).dump() == j.dump());
  }
}

TEST_CASE("scene JSON rejects bad labels and schema") {
  const Scene s = gen_scene(GenSpec{}, 1);
  nlohmann::json j = scene_to_json(s);
  j["spatial"][0][1] = "beside";
  CHECK_THROWS_AS(scene_from_json(j), UnknownLabel);
  nlohmann::json k = scene_to_json(s);
  k.erase("objects");
  CHECK_THROWS_AS(scene_from_json(k), Error);
  CHECK_THROWS_AS(read_scene("/nonexistent/scene.json"), IoError);
}
