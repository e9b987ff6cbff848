#pragma once

#include <string>
#include <vector>

#include "navstream/config.hpp"
#include "navstream/context.hpp"
#include "navstream/metrics.hpp"
#include "navstream/worldsim.hpp"

namespace navstream {

const char* action_name(ActionKind a);

/// Everything produced by one episode: the world, the trajectory, the
/// context manager's cost and prune logs, and the evaluated metrics.
struct EpisodeOutcome {
  int index = 0;
  World world;
  Episode episode;
  bool stopped = false;
  std::vector<TurnCost> cost_log;
  std::vector<PruneFrameStat> prune_log;
  std::vector<MemoryBlock> memory_blocks;
  EpisodeResult result;
};

/// Run one episode through the session machinery. Expert policy feeds the
/// shortest-path follower's actions through the decode path (teacher
/// forcing); Decoder policy executes the model's constrained greedy actions.
EpisodeOutcome run_episode(const RunConfig& cfg, int episode_index, const Decoder& decoder);

/// All episodes, optionally on a worker pool; results ordered by index.
std::vector<EpisodeOutcome> run_episodes(const RunConfig& cfg, const Decoder& decoder);

/// A fixed-length dialogue (bench_sessions full windows) with a scripted
/// forward patrol, used by bench-latency so every session completes.
EpisodeOutcome run_bench_episode(const RunConfig& cfg, const Decoder& decoder);

/// Subcommand bodies. They build the decoder, run, and write outputs under
/// cfg.out_dir; exit code 0 on success (errors are thrown).
int cmd_run(const RunConfig& cfg);
int cmd_bench_latency(const RunConfig& cfg);
int cmd_prune_report(const RunConfig& cfg);

}  // namespace navstream
