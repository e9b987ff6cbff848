#include <benchmark/benchmark.h>

#include "navstream/worldsim.hpp"

namespace {

using namespace navstream;

void BM_RenderDepth(benchmark::State& state) {
  World w = generate_world(3, static_cast<int>(state.range(0)));
  Intrinsics intr;
  for (auto _ : state) {
    Frame f = render_depth(w, w.start, intr, 0);
    benchmark::DoNotOptimize(f.depth.data());
  }
  state.SetItemsProcessed(state.iterations() * intr.patches());
}
BENCHMARK(BM_RenderDepth)->Arg(16)->Arg(32)->Arg(64);

void BM_ExpertAction(benchmark::State& state) {
  World w = generate_world(5, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ActionKind a = expert_action(w, w.start, w.goal);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_ExpertAction)->Arg(16)->Arg(48);

void BM_GenerateWorld(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    World w = generate_world(seed++, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(w.grid.data());
  }
}
BENCHMARK(BM_GenerateWorld)->Arg(24);

}  // namespace
