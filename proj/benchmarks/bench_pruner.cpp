#include <benchmark/benchmark.h>

#include "navstream/geometry.hpp"
#include "navstream/pruner.hpp"
#include "navstream/rng.hpp"

namespace {

using namespace navstream;

VoxelMap dense_map(int frames, int distinct_voxels, std::uint64_t seed) {
  VoxelMap v;
  v.T = frames;
  v.H = v.W = 14;
  v.v.resize(static_cast<size_t>(frames) * 196);
  Rng rng(seed);
  for (int& e : v.v) e = rng.next_bool(0.1) ? -1 : rng.next_int(0, distinct_voxels - 1);
  return v;
}

void BM_VoxelPrune(benchmark::State& state) {
  VoxelMap v = dense_map(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 11);
  PruneParams p{8, 0.1};
  for (auto _ : state) {
    PruneMask m = voxel_prune(v, p);
    benchmark::DoNotOptimize(m.retained_count());
  }
  state.SetItemsProcessed(state.iterations() * v.T * 196);
}
BENCHMARK(BM_VoxelPrune)->Args({8, 512})->Args({16, 512})->Args({64, 2048});

void BM_BuildVoxelMap(benchmark::State& state) {
  Intrinsics intr;
  Rng rng(7);
  std::vector<Frame> frames;
  for (int t = 0; t < state.range(0); ++t) {
    Frame f;
    f.t = t;
    f.pose = Pose{0.05 * t, 0.0, 0.6, 0.0};
    f.rows = intr.grid_h;
    f.cols = intr.grid_w;
    f.depth.resize(196);
    for (double& d : f.depth) d = rng.next_range(0.3, 9.5);
    frames.push_back(std::move(f));
  }
  for (auto _ : state) {
    VoxelMap v = build_voxel_map(frames, intr, 0.5);
    benchmark::DoNotOptimize(v.valid_count());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 196);
}
BENCHMARK(BM_BuildVoxelMap)->Arg(8)->Arg(32);

}  // namespace
