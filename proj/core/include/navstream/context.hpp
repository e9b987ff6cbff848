#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navstream/decoder.hpp"
#include "navstream/geometry.hpp"
#include "navstream/pruner.hpp"
#include "navstream/tokenspace.hpp"

namespace navstream {

struct ContextParams {
  int window_size = 8;    // N dialogue turns per session
  int memory_frames = 8;  // frames sampled into each memory block
  ActionScheme scheme = ActionScheme::SymbolicSingle;
  bool pruning = true;
  PruneParams prune{};
  double voxel_size = 0.5;
  Intrinsics intrinsics{};
};

struct DialogueTurn {
  int turn_index = 0;
  Frame observation;
  std::vector<ActionKind> actions;  // exactly 4 unless Stop truncates
};

/// Offloaded observation states of one completed window: the sampled frames,
/// the surviving patch coordinates and their cache positions. Rows only ever
/// shrink under later pruning; they are never rewritten or reordered.
struct MemoryBlock {
  int block_index = 0;
  std::vector<Frame> frames;
  std::vector<PatchCoord> retained;
  std::vector<int> positions;
  int valid_at_assembly = 0;
  int retained_at_assembly = 0;

  double prune_ratio() const {
    if (valid_at_assembly == 0) return 0.0;
    return static_cast<double>(valid_at_assembly - retained_at_assembly) / static_cast<double>(valid_at_assembly);
  }
};

struct TurnCost {
  int turn_index = 0;
  int session_index = 0;
  bool session_start = false;
  int prompt_tokens = 0;  // session prompt tokens prefilled this turn
  int prefix_tokens = 0;  // turn-prefix tokens prefilled this turn
  int obs_tokens = 0;     // observation patch tokens prefilled this turn
  int memory_rows = 0;    // memory rows live during this turn
  std::int64_t prefill_tokens = 0;
  std::int64_t decode_tokens = 0;
};

/// Per-frame pruning statistics recorded at each memory assembly.
struct PruneFrameStat {
  int block_index = 0;
  int frame_t = 0;
  int valid = 0;
  int retained = 0;
  bool dropped = false;  // zeroed by the theta frame rule
};

/// One episode's slow-fast context: a sliding window of dialogue turns over
/// the active KV cache, plus pruned memory blocks offloaded from completed
/// windows. Single-owner; independent sessions may run in parallel.
class Session {
 public:
  Session(const Decoder& decoder, ContextParams params);

  struct TurnResult {
    std::vector<ActionKind> actions;
    Logits last_logits;  // logits after the final generated token
    TurnCost cost;
  };

  /// Run one dialogue turn: prefill the session prompt at session starts,
  /// then the turn prefix and the frame's patch tokens, then decode the
  /// action tokens (greedy, constrained to the scheme's action vocabulary).
  /// Slides the window first when it is full. Throws EpisodeTerminated after
  /// Stop has been emitted.
  TurnResult run_turn(const Frame& frame, const std::string& instruction);

  /// Teacher-forced variant: the given actions are encoded and fed through
  /// the decode path instead of the model's own argmax choices.
  TurnResult run_turn(const Frame& frame, const std::string& instruction, std::span<const ActionKind> forced);

  /// Offload the completed window: non-observation rows are discarded,
  /// memory_frames frames are sampled, voxel pruning runs jointly over old
  /// and new memory frames, and the retained observation rows become the next
  /// memory block. Throws WindowNotFull before the window reaches capacity.
  void slide_window();

  bool window_full() const { return static_cast<int>(window_.size()) >= params_.window_size; }
  bool terminated() const { return terminated_; }
  int global_turn() const { return global_turn_; }

  const KVCache& cache() const { return cache_; }
  const std::vector<DialogueTurn>& window() const { return window_; }
  const std::vector<MemoryBlock>& memory_blocks() const { return memory_; }
  const std::vector<TurnCost>& cost_log() const { return cost_log_; }
  const std::vector<PruneFrameStat>& prune_log() const { return prune_log_; }
  int memory_rows() const;

 private:
  TurnResult run_turn_impl(const Frame& frame, const std::string& instruction,
                           std::optional<std::span<const ActionKind>> forced);
  std::vector<Token> observation_tokens(const Frame& frame) const;
  std::vector<int> sample_indices(int available, int wanted) const;

  const Decoder& decoder_;
  ContextParams params_;
  KVCache cache_;
  ActionTrie trie_;
  std::vector<DialogueTurn> window_;
  std::vector<MemoryBlock> memory_;
  std::vector<TurnCost> cost_log_;
  std::vector<PruneFrameStat> prune_log_;
  int global_turn_ = 0;
  bool terminated_ = false;
};

enum class CurveMode { FullTurns, SlidingWindow, SingleTurn };

/// Per-turn prefill token counts under the three accounting strategies.
/// FullTurns reuses the cache across the whole episode (only new tokens
/// count); SlidingWindow re-prefills memory and session prompt at each
/// session start; SingleTurn re-prefills memory, prompt, and every window
/// observation so far at every turn.
std::vector<std::int64_t> prefill_count_curve(std::span<const TurnCost> log, CurveMode mode);

/// latency_t = a * prefill_t + b * decode_t, seconds.
std::vector<double> modeled_latency(std::span<const std::int64_t> prefill, std::span<const std::int64_t> decode,
                                    double a, double b);

}  // namespace navstream
