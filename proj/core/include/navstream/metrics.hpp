#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "navstream/worldsim.hpp"

namespace navstream {

/// One evaluated episode. positions holds the agent position after every
/// action, including the start; reference is the shortest-path waypoint
/// polyline used by nDTW.
struct EpisodeResult {
  Vec2 final_pos;
  Vec2 goal;
  double path_length = 0;      // agent path, meters
  double shortest_length = 0;  // start-to-goal shortest path, meters
  std::vector<Vec2> positions;
  std::vector<Vec2> reference;
  double success_threshold = 3.0;  // d_th, meters
};

/// Euclidean distance from the final position to the goal.
double navigation_error(const EpisodeResult& r);

/// 1 when the agent stopped within d_th of the goal.
int success(const EpisodeResult& r);

/// 1 when any visited position came within d_th of the goal.
int oracle_success(const EpisodeResult& r);

/// Success weighted by path length: mean of S_i * l_i / max(p_i, l_i).
/// Throws DegenerateEpisode when any shortest length is zero.
double spl(std::span<const EpisodeResult> results);

/// Normalized dynamic time warping between two paths:
/// exp(-DTW(path, reference) / (|reference| * d_th)).
double ndtw(std::span<const Vec2> path, std::span<const Vec2> reference, double d_th);

struct MetricsSummary {
  int episodes = 0;
  double ne_mean = 0, sr = 0, os = 0, spl = 0, ndtw_mean = 0;
};

MetricsSummary summarize(std::span<const EpisodeResult> results);

/// Summary CSV: header "episodes,NE_mean,SR,OS,SPL,nDTW_mean" plus one row.
void write_metrics_csv(std::ostream& out, const MetricsSummary& s);

/// Build the result record for an episode run in a world.
EpisodeResult evaluate_episode(const World& world, const Episode& ep, double d_th);

}  // namespace navstream
