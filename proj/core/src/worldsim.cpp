#include "navstream/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "navstream/rng.hpp"

namespace navstream {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTurnRad = kTurnDegrees * M_PI / 180.0;

struct CellRef {
  int r, c;
};

const int kDr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
const int kDc[8] = {0, 0, -1, 1, -1, 1, -1, 1};

// Dijkstra over free cells; diagonals cost sqrt(2) and require both
// orthogonal neighbors free.
struct GridSearch {
  std::vector<double> dist;
  std::vector<int> prev;
  int rows, cols;

  GridSearch(const World& w, int sr, int sc) : rows(w.rows()), cols(w.cols()) {
    dist.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), kInf);
    prev.assign(dist.size(), -1);
    auto idx = [this](int r, int c) { return r * cols + c; };
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    if (w.occupied(sr, sc)) return;
    dist[static_cast<size_t>(idx(sr, sc))] = 0.0;
    pq.emplace(0.0, idx(sr, sc));
    while (!pq.empty()) {
      auto [d, i] = pq.top();
      pq.pop();
      if (d > dist[static_cast<size_t>(i)]) continue;
      int r = i / cols, c = i % cols;
      for (int k = 0; k < 8; ++k) {
        int nr = r + kDr[k], nc = c + kDc[k];
        if (w.occupied(nr, nc)) continue;
        if (k >= 4 && (w.occupied(r, nc) || w.occupied(nr, c))) continue;  // no corner cutting
        double nd = d + (k >= 4 ? M_SQRT2 : 1.0);
        size_t ni = static_cast<size_t>(idx(nr, nc));
        if (nd < dist[ni] - 1e-12) {
          dist[ni] = nd;
          prev[ni] = i;
          pq.emplace(nd, idx(nr, nc));
        }
      }
    }
  }
};

}  // namespace

std::string World::to_json() const {
  nlohmann::json j;
  j["grid"] = grid;
  j["cell_size"] = cell;
  j["wall_height"] = wall_height;
  j["camera_height"] = camera_height;
  j["start"] = {start.x, start.y, start.yaw};
  j["goal"] = {goal.x, goal.y};
  return j.dump(2);
}

World World::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  World w;
  w.grid = j.at("grid").get<std::vector<std::string>>();
  w.cell = j.at("cell_size").get<double>();
  w.wall_height = j.at("wall_height").get<double>();
  w.camera_height = j.at("camera_height").get<double>();
  auto s = j.at("start");
  w.start = Pose{s.at(0).get<double>(), s.at(1).get<double>(), w.camera_height, s.at(2).get<double>()};
  auto g = j.at("goal");
  w.goal = Vec2{g.at(0).get<double>(), g.at(1).get<double>()};
  return w;
}

World make_room_world(int rows, int cols, double cell) {
  World w;
  w.cell = cell;
  w.grid.assign(static_cast<size_t>(rows), std::string(static_cast<size_t>(cols), '.'));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) {
        w.grid[static_cast<size_t>(r)][static_cast<size_t>(c)] = '#';
      }
    }
  }
  Vec2 center = w.cell_center(rows / 2, cols / 2);
  w.start = Pose{center.x, center.y, w.camera_height, 0.0};
  w.goal = center;
  return w;
}

World make_corridor_world(int length_cells, int width_cells, double cell) {
  World w = make_room_world(width_cells + 2, length_cells + 2, cell);
  Vec2 start = w.cell_center(1 + width_cells / 2, 1);
  w.start = Pose{start.x, start.y, w.camera_height, 0.0};
  w.goal = w.cell_center(1 + width_cells / 2, length_cells);
  return w;
}

World generate_world(std::uint64_t seed, int size) {
  Rng rng(mix_seed(seed, 0x3077));
  for (int attempt = 0;; ++attempt) {
    World w = make_room_world(size, size);
    int n_rects = std::max(2, size * size / 24);
    for (int k = 0; k < n_rects; ++k) {
      int h = rng.next_int(1, 3), wd = rng.next_int(1, 3);
      int r0 = rng.next_int(1, size - 1 - h);
      int c0 = rng.next_int(1, size - 1 - wd);
      for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + wd; ++c) w.grid[static_cast<size_t>(r)][static_cast<size_t>(c)] = '#';
    }
    std::vector<CellRef> free_cells;
    for (int r = 1; r < size - 1; ++r)
      for (int c = 1; c < size - 1; ++c)
        if (!w.occupied(r, c)) free_cells.push_back({r, c});
    if (free_cells.size() < 2) continue;

    double min_sep = static_cast<double>(size) / 2.0;
    for (int trial = 0; trial < 64; ++trial) {
      const CellRef& a = free_cells[rng.next_below(free_cells.size())];
      const CellRef& b = free_cells[rng.next_below(free_cells.size())];
      double sep = std::hypot(static_cast<double>(a.r - b.r), static_cast<double>(a.c - b.c));
      if (sep < min_sep) continue;
      GridSearch search(w, a.r, a.c);
      if (!std::isfinite(search.dist[static_cast<size_t>(b.r * w.cols() + b.c)])) continue;
      Vec2 sp = w.cell_center(a.r, a.c);
      Vec2 gp = w.cell_center(b.r, b.c);
      double bearing = std::atan2(gp.y - sp.y, gp.x - sp.x);
      double yaw = normalize_angle(std::round(bearing / kTurnRad) * kTurnRad);
      w.start = Pose{sp.x, sp.y, w.camera_height, yaw};
      w.goal = gp;
      return w;
    }
    // separation or reachability failed; reroll the obstacle layout
  }
}

Frame render_depth(const World& world, const Pose& pose, const Intrinsics& intr, int frame_t) {
  if (world.occupied_at(pose.x, pose.y)) throw PoseInCollision("render pose inside occupied cell");
  Frame f;
  f.t = frame_t;
  f.pose = pose;
  f.rows = intr.grid_h;
  f.cols = intr.grid_w;
  f.depth.assign(static_cast<size_t>(intr.grid_h) * static_cast<size_t>(intr.grid_w), -1.0);

  double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  for (int px = 0; px < intr.grid_h; ++px) {
    double yd = (static_cast<double>(px) - intr.cy()) / intr.focal_y();  // camera-down slope
    for (int py = 0; py < intr.grid_w; ++py) {
      double xr = (static_cast<double>(py) - intr.cx()) / intr.focal_x();  // camera-right slope
      // World-plane direction with unit forward projection: parameter t is
      // the forward distance, i.e. exactly the stored depth.
      double dx = cy + sy * xr;
      double dy = sy - cy * xr;
      double t_floor = yd > 1e-12 ? pose.z / yd : kInf;

      int r = world.cell_of(pose.y), c = world.cell_of(pose.x);
      int step_c = dx > 0 ? 1 : -1, step_r = dy > 0 ? 1 : -1;
      double tdx = std::abs(dx) > 1e-12 ? world.cell / std::abs(dx) : kInf;
      double tdy = std::abs(dy) > 1e-12 ? world.cell / std::abs(dy) : kInf;
      double next_cx = (static_cast<double>(c) + (dx > 0 ? 1.0 : 0.0)) * world.cell;
      double next_cy = (static_cast<double>(r) + (dy > 0 ? 1.0 : 0.0)) * world.cell;
      double tmax_x = std::abs(dx) > 1e-12 ? (next_cx - pose.x) / dx : kInf;
      double tmax_y = std::abs(dy) > 1e-12 ? (next_cy - pose.y) / dy : kInf;

      double depth = -1.0;
      while (true) {
        double t_cross = std::min(tmax_x, tmax_y);
        if (std::min(t_floor, t_cross) > intr.max_range) break;
        if (t_floor <= t_cross) {
          depth = t_floor;
          break;
        }
        if (tmax_x <= tmax_y) {
          c += step_c;
          tmax_x += tdx;
        } else {
          r += step_r;
          tmax_y += tdy;
        }
        if (world.occupied(r, c)) {
          double z = pose.z - yd * t_cross;
          if (z <= world.wall_height) {
            depth = t_cross;
            break;
          }
          // Ray passes above this wall; rising rays may still exit the grid,
          // so the max_range check above bounds the march.
        }
      }
      f.at(px, py) = depth;
    }
  }
  return f;
}

Pose step_agent(const World& world, const Pose& pose, ActionKind action) {
  Pose out = pose;
  switch (action) {
    case ActionKind::TurnLeft:
      out.yaw = normalize_angle(pose.yaw + kTurnRad);
      break;
    case ActionKind::TurnRight:
      out.yaw = normalize_angle(pose.yaw - kTurnRad);
      break;
    case ActionKind::MoveForward: {
      double nx = pose.x + kForwardMeters * std::cos(pose.yaw);
      double ny = pose.y + kForwardMeters * std::sin(pose.yaw);
      if (!world.occupied_at(nx, ny)) {
        out.x = nx;
        out.y = ny;
      }
      break;
    }
    case ActionKind::Stop:
      break;
  }
  return out;
}

double shortest_path_length(const World& world, Vec2 a, Vec2 b) {
  int ar = world.cell_of(a.y), ac = world.cell_of(a.x);
  int br = world.cell_of(b.y), bc = world.cell_of(b.x);
  GridSearch search(world, ar, ac);
  double d = search.dist[static_cast<size_t>(br * world.cols() + bc)];
  return std::isfinite(d) ? d * world.cell : kInf;
}

std::vector<std::pair<int, int>> shortest_path_cells(const World& world, Vec2 a, Vec2 b) {
  int ar = world.cell_of(a.y), ac = world.cell_of(a.x);
  int br = world.cell_of(b.y), bc = world.cell_of(b.x);
  GridSearch search(world, ar, ac);
  std::vector<std::pair<int, int>> path;
  int i = br * world.cols() + bc;
  if (!std::isfinite(search.dist[static_cast<size_t>(i)])) return path;
  while (i >= 0) {
    path.emplace_back(i / world.cols(), i % world.cols());
    i = search.prev[static_cast<size_t>(i)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

ActionKind expert_action(const World& world, const Pose& pose, Vec2 goal, double stop_radius) {
  double dist = std::hypot(goal.x - pose.x, goal.y - pose.y);
  if (dist <= stop_radius) return ActionKind::Stop;

  auto path = shortest_path_cells(world, Vec2{pose.x, pose.y}, goal);
  if (path.empty()) throw Unreachable("no path from pose to goal");

  Vec2 target = goal;
  if (path.size() > 1) target = world.cell_center(path[1].first, path[1].second);
  double bearing = std::atan2(target.y - pose.y, target.x - pose.x);
  double err = normalize_angle(bearing - pose.yaw);
  if (std::abs(err) > kTurnRad / 2.0) {
    return err > 0 ? ActionKind::TurnLeft : ActionKind::TurnRight;
  }
  return ActionKind::MoveForward;
}

std::string route_instruction(const World& world) {
  auto path = shortest_path_cells(world, Vec2{world.start.x, world.start.y}, world.goal);
  std::vector<std::string> segments;
  int last_dr = 0, last_dc = 0;
  for (size_t i = 1; i < path.size(); ++i) {
    int dr = path[i].first - path[i - 1].first;
    int dc = path[i].second - path[i - 1].second;
    if (i == 1) {
      segments.emplace_back("move forward");
    } else if (dr != last_dr || dc != last_dc) {
      int cross = last_dc * dr - last_dr * dc;
      // Grid r grows along +y, so positive cross products turn left (CCW).
      segments.emplace_back(cross > 0 ? "turn left" : "turn right");
      segments.emplace_back("move forward");
    }
    last_dr = dr;
    last_dc = dc;
  }
  if (segments.empty()) segments.emplace_back("move forward");
  if (segments.size() > 8) segments.resize(8);

  std::string out = "follow the route";
  for (size_t i = 0; i < segments.size(); ++i) {
    out += (i == 0 ? " " : " then ");
    out += segments[i];
  }
  out += " and stop at the goal";
  return out;
}

Episode expert_rollout(const World& world, const Intrinsics& intr, int max_steps, double stop_radius) {
  Episode ep;
  ep.instruction = route_instruction(world);
  ep.start = world.start;
  ep.goal = world.goal;
  Pose pose = world.start;
  ep.path.push_back(pose);
  int turn = 0;
  bool stopped = false;
  while (!stopped && static_cast<int>(ep.actions.size()) < max_steps) {
    ep.frames.push_back(render_depth(world, pose, intr, turn));
    for (int k = 0; k < kActionsPerTurn; ++k) {
      ActionKind a = expert_action(world, pose, world.goal, stop_radius);
      ep.actions.push_back(a);
      pose = step_agent(world, pose, a);
      ep.path.push_back(pose);
      if (a == ActionKind::Stop) {
        stopped = true;
        break;
      }
      if (static_cast<int>(ep.actions.size()) >= max_steps) break;
    }
    ++turn;
  }
  return ep;
}

}  // namespace navstream
