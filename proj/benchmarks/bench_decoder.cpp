#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "navstream/decoder.hpp"
#include "navstream/rng.hpp"
#include "navstream/tokenspace.hpp"

namespace {

using namespace navstream;

struct Rig {
  std::shared_ptr<const Vocabulary> vocab = std::make_shared<const Vocabulary>();
  Decoder decoder{ModelConfig{}, vocab};

  std::vector<Token> tokens(int n, std::uint64_t seed = 5) const {
    Rng rng(seed);
    std::vector<Token> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (rng.next_bool(0.5)) {
        out.push_back(make_patch_token(*vocab, i / 196, rng.next_int(0, 13), rng.next_int(0, 13),
                                       rng.next_range(0.3, 9.0)));
      } else {
        out.push_back(Token{TokenKind::Prompt, rng.next_int(0, vocab->size() - 1), {}, -1.0});
      }
    }
    return out;
  }
};

const Rig& rig() {
  static Rig r;
  return r;
}

void BM_PrefillFrame(benchmark::State& state) {
  auto history = rig().tokens(static_cast<int>(state.range(0)));
  auto frame = rig().tokens(196, 17);
  for (auto _ : state) {
    KVCache cache = rig().decoder.make_cache();
    rig().decoder.prefill(cache, history);
    Logits l = rig().decoder.prefill(cache, frame);
    benchmark::DoNotOptimize(l.values.data());
  }
  state.SetItemsProcessed(state.iterations() * (state.range(0) + 196));
}
BENCHMARK(BM_PrefillFrame)->Arg(0)->Arg(256)->Arg(1024)->Arg(2048);

void BM_DecodeStep(benchmark::State& state) {
  auto history = rig().tokens(static_cast<int>(state.range(0)));
  KVCache cache = rig().decoder.make_cache();
  rig().decoder.prefill(cache, history);
  Token prev{TokenKind::Prompt, 5, {}, -1.0};
  for (auto _ : state) {
    KVCache snapshot = cache;
    auto [l, next] = rig().decoder.decode_step(snapshot, prev);
    benchmark::DoNotOptimize(next.id);
  }
}
BENCHMARK(BM_DecodeStep)->Arg(256)->Arg(1024)->Arg(2048);

void BM_FullRecompute(benchmark::State& state) {
  auto seq = rig().tokens(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto logits = rig().decoder.full_recompute(seq);
    benchmark::DoNotOptimize(logits.back().values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FullRecompute)->Arg(64)->Arg(256)->Arg(512);

void BM_Evict(benchmark::State& state) {
  auto seq = rig().tokens(static_cast<int>(state.range(0)));
  KVCache cache = rig().decoder.make_cache();
  rig().decoder.prefill(cache, seq);
  for (auto _ : state) {
    KVCache snapshot = cache;
    snapshot.evict([](const KVCache::Row& r) { return r.position % 2 == 0; });
    benchmark::DoNotOptimize(snapshot.rows());
  }
}
BENCHMARK(BM_Evict)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
