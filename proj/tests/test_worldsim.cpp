#include <doctest.h>

#include <cmath>

#include "navstream/rng.hpp"
#include "navstream/tokenspace.hpp"
#include "navstream/worldsim.hpp"
#include "oracles.hpp"

using namespace navstream;
using namespace navstream::testing;

TEST_CASE("same seed generates the same world") {
  World a = generate_world(123, 20);
  World b = generate_world(123, 20);
  CHECK(a.grid == b.grid);
  CHECK(a.start.x == b.start.x);
  CHECK(a.start.yaw == b.start.yaw);
  CHECK(a.goal.x == b.goal.x);
  CHECK(generate_world(124, 20).grid != a.grid);
}

TEST_CASE("borders are occupied and start/goal are reachable") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    World w = generate_world(seed, 18);
    for (int c = 0; c < w.cols(); ++c) {
      CHECK(w.occupied(0, c));
      CHECK(w.occupied(w.rows() - 1, c));
    }
    for (int r = 0; r < w.rows(); ++r) {
      CHECK(w.occupied(r, 0));
      CHECK(w.occupied(r, w.cols() - 1));
    }
    CHECK(!w.occupied_at(w.start.x, w.start.y));
    CHECK(std::isfinite(shortest_path_length(w, Vec2{w.start.x, w.start.y}, w.goal)));
  }
}

TEST_CASE("world json round-trips") {
  World w = generate_world(9, 16);
  World back = World::from_json(w.to_json());
  CHECK(back.grid == w.grid);
  CHECK(back.cell == w.cell);
  CHECK(back.start.x == w.start.x);
  CHECK(back.start.yaw == w.start.yaw);
  CHECK(back.goal.y == w.goal.y);
}

TEST_CASE("facing a wall one meter ahead puts the principal patch at ~1m") {
  // Room wide enough that only the far wall is ahead; the agent stands at a
  // cell center so the wall face sits at a half-cell offset from exactly 1m.
  World w = make_room_world(17, 17);
  Pose pose = w.start;
  int wall_c = w.cell_of(pose.x) + 4;
  for (int r = 1; r < w.rows() - 1; ++r) w.grid[static_cast<size_t>(r)][static_cast<size_t>(wall_c)] = '#';
  pose.yaw = 0.0;

  Intrinsics intr;
  Frame f = render_depth(w, pose, intr, 0);
  double center = f.at(7, 7);
  double face_x = static_cast<double>(wall_c) * w.cell;
  CHECK(center == doctest::Approx(face_x - pose.x).epsilon(1e-9));
  CHECK(std::abs(center - 1.0) <= w.cell / 2.0 + 1e-9);
}

TEST_CASE("turning around in an asymmetric room changes the depth map") {
  World w = make_room_world(13, 21);
  Pose pose = w.start;
  Intrinsics intr;
  Frame fwd = render_depth(w, pose, intr, 0);
  Pose flipped = pose;
  flipped.yaw = normalize_angle(pose.yaw + M_PI);
  Frame rev = render_depth(w, flipped, intr, 1);
  CHECK(fwd.depth != rev.depth);
}

TEST_CASE("a long empty corridor runs beyond max range") {
  World w = make_corridor_world(60, 5);  // 15 m of corridor
  Intrinsics intr;
  Frame f = render_depth(w, w.start, intr, 0);
  CHECK(f.at(7, 7) == -1.0);  // principal ray never hits within 10 m
  // Rows looking down still hit the floor.
  CHECK(f.at(13, 7) > 0.0);
}

TEST_CASE("render refuses a colliding pose") {
  World w = make_room_world(9, 9);
  Pose inside_wall{0.1, 0.1, 0.6, 0};
  CHECK_THROWS_AS(render_depth(w, inside_wall, Intrinsics{}, 0), PoseInCollision);
}

TEST_CASE("depth samples back-project onto occupied surfaces or the floor") {
  World w = generate_world(5, 16);
  Intrinsics intr;
  Frame f = render_depth(w, w.start, intr, 0);
  int checked = 0;
  for (int x = 0; x < 14; ++x) {
    for (int y = 0; y < 14; ++y) {
      double d = f.at(x, y);
      if (d <= 0.0) continue;
      Vec3 p = backproject_patch(x, y, d, intr, f.pose);
      if (std::abs(p.z) < 1e-9) {
        ++checked;  // floor hit
        continue;
      }
      // Wall hit: nudging along the ray must enter an occupied cell.
      Vec3 dir{p.x - f.pose.x, p.y - f.pose.y, p.z - f.pose.z};
      double n = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
      Vec3 beyond{p.x + 1e-6 * dir.x / n, p.y + 1e-6 * dir.y / n, 0};
      CHECK(w.occupied_at(beyond.x, beyond.y));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("turn and step kinematics") {
  World w = make_room_world(21, 21);
  Pose pose = w.start;

  SUBCASE("24 left turns come back to the start heading") {
    Pose p = pose;
    for (int i = 0; i < 24; ++i) p = step_agent(w, p, ActionKind::TurnLeft);
    CHECK(p.yaw == doctest::Approx(pose.yaw).epsilon(1e-9));
    CHECK(p.x == pose.x);
    CHECK(p.y == pose.y);
  }

  SUBCASE("four forward steps travel one meter") {
    Pose p = pose;
    for (int i = 0; i < 4; ++i) p = step_agent(w, p, ActionKind::MoveForward);
    CHECK(std::hypot(p.x - pose.x, p.y - pose.y) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("blocked forward is a no-op") {
    Pose p = pose;
    // March into the east wall.
    for (int i = 0; i < 200; ++i) p = step_agent(w, p, ActionKind::MoveForward);
    Pose q = step_agent(w, p, ActionKind::MoveForward);
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
  }

  SUBCASE("stop leaves the pose untouched") {
    Pose p = step_agent(w, pose, ActionKind::Stop);
    CHECK(p.x == pose.x);
    CHECK(p.yaw == pose.yaw);
  }
}

TEST_CASE("shortest path lengths") {
  World w = make_corridor_world(40, 3);

  SUBCASE("coincident points have zero length") {
    CHECK(shortest_path_length(w, Vec2{1.0, 0.5}, Vec2{1.0, 0.5}) == 0.0);
  }

  SUBCASE("a straight corridor of 10 cells measures 2.5 m") {
    Vec2 a = w.cell_center(2, 3);
    Vec2 b = w.cell_center(2, 13);
    CHECK(shortest_path_length(w, a, b) == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("unreachable pairs report infinity") {
    World blocked = make_room_world(9, 9);
    for (int r = 1; r < 8; ++r) blocked.grid[static_cast<size_t>(r)][4] = '#';
    CHECK(!std::isfinite(shortest_path_length(blocked, blocked.cell_center(4, 2), blocked.cell_center(4, 6))));
  }
}

TEST_CASE("shortest path matches the exact-arithmetic oracle") {
  Rng rng(31);
  for (int iter = 0; iter < 20; ++iter) {
    World w = generate_world(rng.next_u64(), 14);
    Vec2 a{w.start.x, w.start.y};
    double got = shortest_path_length(w, a, w.goal);
    double want = shortest_path_oracle(w, a, w.goal);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("expert stops at the goal and advances toward it") {
  World w = make_room_world(41, 41);
  Pose pose = w.start;

  CHECK(expert_action(w, pose, Vec2{pose.x, pose.y}) == ActionKind::Stop);

  Vec2 ahead{pose.x + 1.0, pose.y};
  pose.yaw = 0.0;
  CHECK(expert_action(w, pose, ahead) == ActionKind::MoveForward);

  Vec2 behind{pose.x - 1.0, pose.y};
  ActionKind a = expert_action(w, pose, behind);
  CHECK((a == ActionKind::TurnLeft || a == ActionKind::TurnRight));
}

TEST_CASE("expert rollouts terminate with Stop on seeded worlds") {
  Intrinsics intr;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    World w = generate_world(seed, 20);
    Episode ep = expert_rollout(w, intr, 500);
    REQUIRE(!ep.actions.empty());
    CHECK(ep.actions.back() == ActionKind::Stop);
    CHECK(static_cast<int>(ep.actions.size()) <= 500);
    CHECK(ep.frames.size() == (ep.actions.size() + kActionsPerTurn - 1) / kActionsPerTurn);
  }
}

TEST_CASE("rollouts are a pure function of seed and actions") {
  Intrinsics intr;
  World w = generate_world(17, 18);
  Episode a = expert_rollout(w, intr, 400);
  Episode b = expert_rollout(w, intr, 400);
  REQUIRE(a.actions == b.actions);
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].depth == b.frames[i].depth);
    CHECK(a.frames[i].pose.x == b.frames[i].pose.x);
  }
}

TEST_CASE("route instructions stay inside the closed vocabulary") {
  Vocabulary vocab;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    World w = generate_world(seed, 16);
    std::string instr = route_instruction(w);
    CHECK_NOTHROW(build_session_prompt(instr, 0, false, vocab));
    CHECK_NOTHROW(build_session_prompt(instr, 1, true, vocab));
  }
}
