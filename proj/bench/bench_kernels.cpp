// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "sonarnav/controller.hpp"
#include "sonarnav/io.hpp"
#include "sonarnav/localization.hpp"
#include "sonarnav/planning.hpp"

using namespace sonarnav;

namespace {

const std::string kSource = SONARNAV_SOURCE_DIR;

NamedMap map_a() {
  NamedMap nm = load_map(kSource + "/maps/map_a.json");
  nm.name = "map_a";
  return nm;
}

struct WeighFixture {
  NamedMap nm = map_a();
  FilterConfig cfg;
  ParticleSet set;
  CleanScan obs;

  explicit WeighFixture(int n) {
    cfg.particle_count = n;
    Rng rng(1);
    set = init_particles(nm.map, cfg, rng);
    obs = extract_windows(ideal_scan(Pose(nm.goal, 0.3), nm.map, kDegree));
  }
};

void BM_weigh(benchmark::State& state) {
  WeighFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(weigh_particles(f.set, f.obs, f.nm.map, f.cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_weigh_serial(benchmark::State& state) {
  WeighFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(weigh_particles_serial(f.set, f.obs, f.nm.map, f.cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<Point2> nodes(int n) {
  const NamedMap nm = map_a();
  const ArenaMap c = inset_polygon(nm.map, PlanConfig{}.cspace_offset());
  Rng rng(2);
  return sample_free_points(c, n, rng);
}

void BM_visibility(benchmark::State& state) {
  const ArenaMap c = inset_polygon(map_a().map, PlanConfig{}.cspace_offset());
  const auto pts = nodes(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(visibility_matrix(pts, c));
}

void BM_visibility_serial(benchmark::State& state) {
  const ArenaMap c = inset_polygon(map_a().map, PlanConfig{}.cspace_offset());
  const auto pts = nodes(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(visibility_matrix_serial(pts, c));
}

void BM_batch(benchmark::State& state) {
  const MissionConfig cfg = load_config(kSource + "/configs/paper.conf").mission;
  const std::vector<NamedMap> maps{map_a()};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_batch(maps, cfg, {0, 1, 2, 3}, false, state.range(0) != 0));
  }
}

}  // namespace

BENCHMARK(BM_weigh)->Arg(500)->Arg(5000);
BENCHMARK(BM_weigh_serial)->Arg(500)->Arg(5000);
BENCHMARK(BM_visibility)->Arg(32)->Arg(128);
BENCHMARK(BM_visibility_serial)->Arg(32)->Arg(128);
BENCHMARK(BM_batch)->ArgName("parallel")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
