#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "navstream/geometry.hpp"
#include "navstream/tokenspace.hpp"

namespace navstream {

class KVCache;

struct PruneParams {
  int stride = 8;      // K: frames per pruning period
  double theta = 0.1;  // frame-drop threshold in [0, 1]
};

/// Binary retention mask over a voxel map's tokens.
struct PruneMask {
  int T = 0, H = 0, W = 0;
  std::vector<std::uint8_t> m;

  bool at(int t, int x, int y) const {
    return m[(static_cast<size_t>(t) * static_cast<size_t>(H) + static_cast<size_t>(x)) * static_cast<size_t>(W) +
             static_cast<size_t>(y)] != 0;
  }
  void set(int t, int x, int y, bool val) {
    m[(static_cast<size_t>(t) * static_cast<size_t>(H) + static_cast<size_t>(x)) * static_cast<size_t>(W) +
      static_cast<size_t>(y)] = val ? 1 : 0;
  }
  int frame_retained(int t) const;
  int retained_count() const;
};

/// Voxel-based spatial pruning. Tokens are grouped by (floor(t/K), voxel id);
/// within each group only the token with the newest t survives (ties broken
/// toward the later row-major (x, y) position). Frames that retain fewer than
/// theta*H*W tokens are then zeroed entirely.
PruneMask voxel_prune(const VoxelMap& v, const PruneParams& params);

/// Fraction of valid tokens removed by the mask: (valid - retained) / valid,
/// 0 when the map has no valid tokens. Restricted variants consider only the
/// listed frame slices.
double prune_ratio(const PruneMask& m, const VoxelMap& v);
double prune_ratio(const PruneMask& m, const VoxelMap& v, std::span<const int> frame_ts);

/// Evict the cache's observation/memory rows whose mask entry is 0. Rows of
/// other roles are untouched; retained rows keep their values and positions.
/// Throws CoordinateMismatch if an observation row lies outside the mask.
void apply_mask(KVCache& cache, const PruneMask& m);

/// Token-list variant of apply_mask: returns the retained subsequence.
std::vector<Token> apply_mask(std::span<const Token> tokens, const PruneMask& m);

}  // namespace navstream
