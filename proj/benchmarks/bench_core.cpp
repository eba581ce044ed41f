#include <random>

#include <benchmark/benchmark.h>

#include "faraway/clustering.hpp"
#include "faraway/eval.hpp"
#include "faraway/geometry.hpp"
#include "faraway/regressor.hpp"
#include "faraway/synthetic.hpp"

using namespace faraway;

namespace {

PointCloud random_lidar(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fwd(0, 100), side(-40, 40), up(-2, 2);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(fwd(rng), side(rng), up(rng));
  return PointCloud(Frame::Lidar, pts);
}

Box3D box(double x, double z, double yaw) {
  Box3D b;
  b.cls = ObjectClass::car();
  b.center = Vec3(x, 1.6, z);
  b.size = {1.6, 3.9, 1.5};
  b.yaw = yaw;
  return b;
}

}  // namespace

static void BM_BoxFrustum(benchmark::State& state) {
  const auto cloud = random_lidar(static_cast<std::size_t>(state.range(0)), 1);
  const auto calib = synthetic::calibration();
  Detection2D det;
  det.cls = ObjectClass::car();
  det.bbox = {250, 60, 350, 140};
  for (auto _ : state) benchmark::DoNotOptimize(box_frustum_indices(cloud, det, calib, synthetic::image_dims()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BoxFrustum)->Arg(10'000)->Arg(120'000);

static void BM_EstimateCentroid(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0, 1);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec3(d(rng), d(rng), 60 + d(rng));
  const PointCloud cloud(Frame::Frustum, pts);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_centroid(cloud));
}
BENCHMARK(BM_EstimateCentroid)->Arg(10)->Arg(1'000);

static void BM_BevIou(benchmark::State& state) {
  const auto a = box(0, 70, 0.3), b = box(0.8, 70.5, -0.6);
  for (auto _ : state) benchmark::DoNotOptimize(bev_iou(a, b));
}
BENCHMARK(BM_BevIou);

static void BM_Forward(benchmark::State& state) {
  const auto params = init_params(32, 64, default_priors(), 3);
  std::vector<Vec2> pts{{0.1, 0.2}, {-0.3, 0.5}, {1.0, -1.2}, {0.0, 0.0}};
  const auto raster = rasterize_bev(pts, ObjectClass::pedestrian(), {32, 4});
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, raster));
}
BENCHMARK(BM_Forward);

BENCHMARK_MAIN();
