#include <doctest.h>

#include <memory>

#include "navstream/decoder.hpp"
#include "navstream/rng.hpp"
#include "oracles.hpp"

using namespace navstream;
using namespace navstream::testing;

namespace {

struct Fixture {
  std::shared_ptr<const Vocabulary> vocab = std::make_shared<const Vocabulary>();
  ModelConfig cfg;
  Decoder dec{cfg, vocab};
};

}  // namespace

TEST_CASE("single-chunk prefill reproduces the full recompute") {
  Fixture f;
  Rng rng(1);
  auto seq = random_sequence(rng, *f.vocab, 24);
  KVCache cache = f.dec.make_cache();
  Logits got = f.dec.prefill(cache, seq);
  auto want = f.dec.full_recompute(seq);
  CHECK(max_abs_diff(got, want.back()) <= 1e-12);
  CHECK(cache.rows() == static_cast<int>(seq.size()));
}

TEST_CASE("two-chunk prefill matches the oracle") {
  Fixture f;
  Rng rng(2);
  auto s1 = random_sequence(rng, *f.vocab, 16);
  auto s2 = random_sequence(rng, *f.vocab, 16);
  KVCache cache = f.dec.make_cache();
  f.dec.prefill(cache, s1);
  Logits got = f.dec.prefill(cache, s2);

  std::vector<Token> joined = s1;
  joined.insert(joined.end(), s2.begin(), s2.end());
  auto want = f.dec.full_recompute(joined);
  CHECK(max_abs_diff(got, want.back()) <= 1e-5);
}

TEST_CASE("prefilling one frame of patches adds 196 rows per layer") {
  Fixture f;
  std::vector<Token> obs;
  for (int x = 0; x < 14; ++x)
    for (int y = 0; y < 14; ++y) obs.push_back(make_patch_token(*f.vocab, 0, x, y, 2.0));
  KVCache cache = f.dec.make_cache();
  f.dec.prefill(cache, obs);
  CHECK(cache.rows() == 196);
  for (int l = 0; l < f.cfg.layers; ++l) {
    CHECK(cache.layer_k(l).size() == 196u * static_cast<size_t>(f.cfg.model_dim()));
    CHECK(cache.layer_v(l).size() == 196u * static_cast<size_t>(f.cfg.model_dim()));
  }
}

TEST_CASE("greedy decode is deterministic") {
  Fixture f;
  Rng rng(3);
  auto seq = random_sequence(rng, *f.vocab, 20);
  KVCache a = f.dec.make_cache();
  KVCache b = f.dec.make_cache();
  f.dec.prefill(a, seq);
  f.dec.prefill(b, seq);
  Token prev{TokenKind::Prompt, f.vocab->id_of("You"), {}, -1.0};
  auto [la, ta] = f.dec.decode_step(a, prev);
  auto [lb, tb] = f.dec.decode_step(b, prev);
  CHECK(ta.id == tb.id);
  CHECK(max_abs_diff(la, lb) == 0.0);
}

TEST_CASE("decode after prefill equals the last position of the full recompute") {
  Fixture f;
  Rng rng(4);
  auto seq = random_sequence(rng, *f.vocab, 30);
  Token prev = random_token(rng, *f.vocab);

  KVCache cache = f.dec.make_cache();
  f.dec.prefill(cache, seq);
  auto [logits, next] = f.dec.decode_step(cache, prev);

  std::vector<Token> joined = seq;
  joined.push_back(prev);
  auto want = f.dec.full_recompute(joined);
  CHECK(max_abs_diff(logits, want.back()) <= 1e-5);
}

TEST_CASE("length-1 sequence uses the embedding path alone") {
  Fixture f;
  Token tok{TokenKind::Prompt, f.vocab->id_of("navigation"), {}, -1.0};
  auto full = f.dec.full_recompute(std::span<const Token>(&tok, 1));
  REQUIRE(full.size() == 1);
  for (double v : full[0].values) CHECK(std::isfinite(v));
  KVCache cache = f.dec.make_cache();
  Logits pre = f.dec.prefill(cache, std::span<const Token>(&tok, 1));
  CHECK(max_abs_diff(pre, full[0]) == 0.0);
}

TEST_CASE("chunked prefill equivalence over random partitions") {
  Fixture f;
  Rng rng(5);
  for (int iter = 0; iter < 25; ++iter) {
    auto seq = random_sequence(rng, *f.vocab, 64);
    auto full = f.dec.full_recompute(seq);
    auto chunks = random_chunk_sizes(rng, static_cast<int>(seq.size()));

    KVCache cache = f.dec.make_cache();
    size_t offset = 0;
    for (int c : chunks) {
      Logits got = f.dec.prefill(cache, std::span<const Token>(seq).subspan(offset, static_cast<size_t>(c)));
      offset += static_cast<size_t>(c);
      CHECK(max_abs_diff(got, full[offset - 1]) <= 1e-5);
    }
  }
}

TEST_CASE("swapping two tokens changes the logits") {
  Fixture f;
  Rng rng(6);
  auto seq = random_sequence(rng, *f.vocab, 12);
  seq.resize(8);
  auto base = f.dec.full_recompute(seq);
  std::swap(seq[1], seq[5]);
  auto swapped = f.dec.full_recompute(seq);
  CHECK(max_abs_diff(base.back(), swapped.back()) > 1e-8);
}

TEST_CASE("eviction keeps survivors' positions and matches the survivor oracle") {
  Fixture f;
  Rng rng(7);
  auto seq = random_sequence(rng, *f.vocab, 40);
  KVCache cache = f.dec.make_cache();
  f.dec.prefill(cache, seq);

  SUBCASE("keep-all is the identity") {
    KVCache copy = cache;
    copy.evict([](const KVCache::Row&) { return true; });
    CHECK(copy.rows() == cache.rows());
    CHECK(copy.row_positions() == cache.row_positions());
  }

  SUBCASE("keep-none empties the cache") {
    KVCache copy = cache;
    copy.evict([](const KVCache::Row&) { return false; });
    CHECK(copy.rows() == 0);
    for (int l = 0; l < f.cfg.layers; ++l) CHECK(copy.layer_k(l).empty());
  }

  SUBCASE("decode over an evicted cache equals recompute over survivors") {
    for (int trial = 0; trial < 10; ++trial) {
      KVCache copy = cache;
      Rng mask_rng(100 + static_cast<std::uint64_t>(trial));
      copy.evict([&](const KVCache::Row&) { return mask_rng.next_bool(0.6); });

      auto survivors = copy.row_tokens();
      auto positions = copy.row_positions();
      Token prev = random_token(mask_rng, *f.vocab);
      int new_pos = copy.next_position();
      auto [logits, next] = f.dec.decode_step(copy, prev);

      survivors.push_back(prev);
      positions.push_back(new_pos);
      auto want = f.dec.full_recompute(survivors, positions);
      CHECK(max_abs_diff(logits, want.back()) <= 1e-5);
    }
  }
}

TEST_CASE("positions are assigned once and never reassigned") {
  Fixture f;
  Rng rng(8);
  auto seq = random_sequence(rng, *f.vocab, 20);
  KVCache cache = f.dec.make_cache();
  f.dec.prefill(cache, seq);
  auto before = cache.row_positions();
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == static_cast<int>(i));

  cache.evict([&](const KVCache::Row& r) { return r.position % 3 != 0; });
  for (const auto& row : cache.row_meta()) CHECK(row.position % 3 != 0);
  auto kept = cache.row_positions();
  CHECK(std::is_sorted(kept.begin(), kept.end()));

  Token prev = random_token(rng, *f.vocab);
  f.dec.decode_step(cache, prev);
  CHECK(cache.row_meta().back().position == static_cast<int>(seq.size()));
}

TEST_CASE("cost counters track prefill tokens and decode calls") {
  Fixture f;
  Rng rng(9);
  KVCache cache = f.dec.make_cache();
  auto s1 = random_sequence(rng, *f.vocab, 10);
  auto s2 = random_sequence(rng, *f.vocab, 10);
  f.dec.prefill(cache, s1);
  f.dec.prefill(cache, s2);
  CHECK(cache.prefill_tokens() == static_cast<std::int64_t>(s1.size() + s2.size()));
  CHECK(cache.decode_steps() == 0);
  Token prev = random_token(rng, *f.vocab);
  f.dec.decode_step(cache, prev);
  f.dec.decode_step(cache, prev);
  CHECK(cache.decode_steps() == 2);
  cache.evict([](const KVCache::Row&) { return false; });
  CHECK(cache.prefill_tokens() == static_cast<std::int64_t>(s1.size() + s2.size()));  // counters survive eviction
}

TEST_CASE("restricted argmax picks from the allowed ids only") {
  Fixture f;
  Logits l;
  l.values.assign(static_cast<size_t>(f.vocab->size()), 0.0);
  l.values[3] = 10.0;  // global max
  int allowed_arr[] = {5, 9};
  l.values[9] = 1.0;
  CHECK(f.dec.argmax(l) == 3);
  CHECK(f.dec.argmax(l, allowed_arr) == 9);
}

TEST_CASE("kv byte estimate follows the formula") {
  ModelConfig toy;
  toy.layers = 2;
  toy.heads = 4;
  toy.head_dim = 8;
  CHECK(Decoder::estimate_kv_bytes(toy, 0, 2) == 0);
  CHECK(Decoder::estimate_kv_bytes(toy, 2048, 2) == 524288);  // 2*2*4*8*2048*2
  ModelConfig big;
  big.layers = 32;
  big.heads = 32;
  big.head_dim = 128;
  CHECK(Decoder::estimate_kv_bytes(big, 2048, 2) ==
        2LL * 32 * 32 * 128 * 2048 * 2);
}
