#include "navstream/pruner.hpp"

#include <unordered_map>

#include "navstream/decoder.hpp"

namespace navstream {

int PruneMask::frame_retained(int t) const {
  int n = 0;
  for (int x = 0; x < H; ++x)
    for (int y = 0; y < W; ++y) n += at(t, x, y);
  return n;
}

int PruneMask::retained_count() const {
  int n = 0;
  for (auto b : m) n += b;
  return n;
}

PruneMask voxel_prune(const VoxelMap& v, const PruneParams& params) {
  PruneMask mask;
  mask.T = v.T;
  mask.H = v.H;
  mask.W = v.W;
  mask.m.assign(static_cast<size_t>(v.T) * static_cast<size_t>(v.H) * static_cast<size_t>(v.W), 0);

  struct Coord {
    int t, x, y;
  };
  std::unordered_map<std::uint64_t, Coord> latest;
  for (int t = 0; t < v.T; ++t) {
    int period = t / params.stride;
    for (int x = 0; x < v.H; ++x) {
      for (int y = 0; y < v.W; ++y) {
        int vox = v.at(t, x, y);
        if (vox < 0) continue;
        std::uint64_t key = (static_cast<std::uint64_t>(period) << 32) | static_cast<std::uint32_t>(vox);
        auto it = latest.find(key);
        // Ascending (t, x, y) scan: replacing on t >= keeps the newest frame,
        // ties broken toward the later row-major position.
        if (it == latest.end() || t >= it->second.t) {
          latest[key] = Coord{t, x, y};
        }
      }
    }
  }
  for (const auto& [key, c] : latest) mask.set(c.t, c.x, c.y, true);

  double min_tokens = params.theta * static_cast<double>(v.H) * static_cast<double>(v.W);
  for (int t = 0; t < v.T; ++t) {
    if (static_cast<double>(mask.frame_retained(t)) < min_tokens) {
      for (int x = 0; x < v.H; ++x)
        for (int y = 0; y < v.W; ++y) mask.set(t, x, y, false);
    }
  }
  return mask;
}

double prune_ratio(const PruneMask& m, const VoxelMap& v) {
  int valid = v.valid_count();
  if (valid == 0) return 0.0;
  return static_cast<double>(valid - m.retained_count()) / static_cast<double>(valid);
}

double prune_ratio(const PruneMask& m, const VoxelMap& v, std::span<const int> frame_ts) {
  int valid = 0, retained = 0;
  for (int t : frame_ts) {
    for (int x = 0; x < v.H; ++x) {
      for (int y = 0; y < v.W; ++y) {
        valid += (v.at(t, x, y) >= 0);
        retained += m.at(t, x, y);
      }
    }
  }
  if (valid == 0) return 0.0;
  return static_cast<double>(valid - retained) / static_cast<double>(valid);
}

namespace {

bool mask_keeps(const PruneMask& m, const PatchCoord& c) {
  if (c.frame_t < 0 || c.frame_t >= m.T || c.x < 0 || c.x >= m.H || c.y < 0 || c.y >= m.W) {
    throw CoordinateMismatch("observation coordinate outside prune mask shape");
  }
  return m.at(c.frame_t, c.x, c.y);
}

}  // namespace

void apply_mask(KVCache& cache, const PruneMask& m) {
  cache.evict([&](const KVCache::Row& row) {
    if (row.token.kind != TokenKind::Observation && row.token.kind != TokenKind::Memory) return true;
    return mask_keeps(m, row.token.patch);
  });
}

std::vector<Token> apply_mask(std::span<const Token> tokens, const PruneMask& m) {
  std::vector<Token> out;
  for (const Token& tok : tokens) {
    if (tok.kind != TokenKind::Observation && tok.kind != TokenKind::Memory) {
      out.push_back(tok);
      continue;
    }
    if (mask_keeps(m, tok.patch)) out.push_back(tok);
  }
  return out;
}

}  // namespace navstream
