#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "navstream/geometry.hpp"
#include "navstream/tokenspace.hpp"

namespace navstream {

struct Vec2 {
  double x = 0, y = 0;
};

/// Occupancy-grid world. Cell (r, c) covers x in [c*cell, (c+1)*cell),
/// y in [r*cell, (r+1)*cell); '#' occupied, '.' free. Border cells are
/// always occupied. Out-of-bounds queries count as occupied.
struct World {
  std::vector<std::string> grid;
  double cell = 0.25;
  double wall_height = 2.0;
  double camera_height = 0.6;
  Pose start;
  Vec2 goal;

  int rows() const { return static_cast<int>(grid.size()); }
  int cols() const { return grid.empty() ? 0 : static_cast<int>(grid[0].size()); }
  bool occupied(int r, int c) const {
    if (r < 0 || c < 0 || r >= rows() || c >= cols()) return true;
    return grid[static_cast<size_t>(r)][static_cast<size_t>(c)] == '#';
  }
  int cell_of(double coord) const { return static_cast<int>(std::floor(coord / cell)); }
  bool occupied_at(double x, double y) const { return occupied(cell_of(y), cell_of(x)); }
  Vec2 cell_center(int r, int c) const {
    return {(static_cast<double>(c) + 0.5) * cell, (static_cast<double>(r) + 0.5) * cell};
  }

  std::string to_json() const;
  static World from_json(const std::string& text);
};

/// Seeded random rooms-and-corridors world with mutually reachable start and
/// goal. Deterministic: same seed, same world.
World generate_world(std::uint64_t seed, int size);

/// Handy scripted worlds for geometric constructions.
World make_room_world(int rows, int cols, double cell = 0.25);
World make_corridor_world(int length_cells, int width_cells = 3, double cell = 0.25);

/// Per-patch raycast depth at patch resolution: nearest wall-face or floor
/// hit as forward distance, -1 beyond max_range. Throws PoseInCollision.
Frame render_depth(const World& world, const Pose& pose, const Intrinsics& intr, int frame_t = 0);

/// Discrete kinematics. Turns rotate yaw by 15 degrees, MoveForward advances
/// 0.25 m when the target cell is free (blocked moves are a no-op), Stop
/// leaves the pose unchanged.
Pose step_agent(const World& world, const Pose& pose, ActionKind action);

/// Shortest-path length in meters between two free points, 8-connected over
/// cells with sqrt(2)-weighted diagonals (no corner cutting). Returns
/// +infinity when unreachable.
double shortest_path_length(const World& world, Vec2 a, Vec2 b);

/// Cell path of the shortest route (cells as (r, c) pairs, including the
/// start cell). Empty when unreachable.
std::vector<std::pair<int, int>> shortest_path_cells(const World& world, Vec2 a, Vec2 b);

/// Shortest-path follower: Stop within stop_radius of the goal, otherwise
/// turn toward the next waypoint when the heading error exceeds half the turn
/// quantum (7.5 degrees), else move forward. Throws Unreachable.
ActionKind expert_action(const World& world, const Pose& pose, Vec2 goal, double stop_radius = 0.5);

struct Episode {
  std::string instruction;
  Pose start;
  Vec2 goal;
  std::vector<Pose> path;            // pose after every action, including start
  std::vector<ActionKind> actions;
  std::vector<Frame> frames;         // one per dialogue turn
};

/// Landmark-free instruction text generated from the expert route, restricted
/// to the closed instruction vocabulary.
std::string route_instruction(const World& world);

/// Expert rollout without the dialogue machinery (up to max_steps actions,
/// frames rendered every actions_per_turn steps). Used by metric tests.
Episode expert_rollout(const World& world, const Intrinsics& intr, int max_steps = 500,
                       double stop_radius = 0.5);

}  // namespace navstream
