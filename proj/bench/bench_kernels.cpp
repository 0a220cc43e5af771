// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "gen.hpp"
#include "scenediff/geom/chamfer.hpp"
#include "scenediff/geom/collision.hpp"
#include "scenediff/geom/sampling.hpp"
#include "scenediff/guidance.hpp"
#include "scenediff/reference.hpp"

using namespace scenediff;

namespace {

// Two overlapping blobs with about 8 * rings^2 faces each.
std::vector<TriMesh> blob_pair(int rings) {
  gen::Rng rng(1);
  return {gen::blob(rng, rings, 2 * rings).transformed(gen::rotation(rng), Vec3::Zero()),
          gen::blob(rng, rings, 2 * rings).transformed(gen::rotation(rng), Vec3(0.6, 0.2, 0.1))};
}

void BM_CollisionPairsBvh(benchmark::State& state) {
  const auto meshes = blob_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(geom::find_collision_pairs(meshes));
  state.counters["faces"] = static_cast<double>(meshes[0].num_faces());
}

void BM_CollisionPairsReference(benchmark::State& state) {
  const auto meshes = blob_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::collision_pairs(meshes));
  state.counters["faces"] = static_cast<double>(meshes[0].num_faces());
}

std::pair<geom::SurfaceSample, geom::SurfaceSample> sample_pair(int count) {
  const auto meshes = blob_pair(12);
  return {geom::sample_surface(meshes[0], count, 1), geom::sample_surface(meshes[1], count, 2)};
}

void BM_SignedChamferGrid(benchmark::State& state) {
  const auto [a, b] = sample_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(geom::signed_chamfer(a, b));
}

void BM_SignedChamferReference(benchmark::State& state) {
  const auto [a, b] = sample_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::signed_chamfer(a, b));
}

Scene guidance_scene() {
  GenSpec spec;
  spec.min_objects = 8;
  spec.max_objects = 8;
  Scene s = gen_scene(spec, 3);
  gen::Rng rng(4);
  for (SceneObject& o : s.objects) o.position += gen::vec3(rng, -0.05, 0.05);
  return s;
}

void BM_GuidanceAnalytic(benchmark::State& state) {
  const Scene s = guidance_scene();
  const GuidanceConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(composite_gradient(s, cfg));
}

void BM_GuidanceFiniteDifference(benchmark::State& state) {
  const Scene s = guidance_scene();
  GuidanceConfig cfg;
  cfg.grad_mode = GradMode::finite_difference;
  for (auto _ : state) benchmark::DoNotOptimize(composite_gradient(s, cfg));
}

}  // namespace

BENCHMARK(BM_CollisionPairsBvh)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CollisionPairsReference)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SignedChamferGrid)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SignedChamferReference)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GuidanceAnalytic)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GuidanceFiniteDifference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
