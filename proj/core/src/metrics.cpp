#include "navstream/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace navstream {

namespace {

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double dtw(std::span<const Vec2> path, std::span<const Vec2> reference) {
  size_t n = path.size(), m = reference.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = kInf;
    for (size_t j = 1; j <= m; ++j) {
      double d = dist(path[i - 1], reference[j - 1]);
      cur[j] = d + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

double navigation_error(const EpisodeResult& r) { return dist(r.final_pos, r.goal); }

int success(const EpisodeResult& r) { return navigation_error(r) <= r.success_threshold ? 1 : 0; }

int oracle_success(const EpisodeResult& r) {
  for (const Vec2& p : r.positions) {
    if (dist(p, r.goal) <= r.success_threshold) return 1;
  }
  return 0;
}

double spl(std::span<const EpisodeResult> results) {
  if (results.empty()) return 0.0;
  double acc = 0.0;
  for (const EpisodeResult& r : results) {
    if (!(r.shortest_length > 0.0)) {
      throw DegenerateEpisode("episode with zero shortest-path length (start = goal)");
    }
    acc += success(r) * r.shortest_length / std::max(r.path_length, r.shortest_length);
  }
  return acc / static_cast<double>(results.size());
}

double ndtw(std::span<const Vec2> path, std::span<const Vec2> reference, double d_th) {
  double d = dtw(path, reference);
  return std::exp(-d / (static_cast<double>(reference.size()) * d_th));
}

MetricsSummary summarize(std::span<const EpisodeResult> results) {
  MetricsSummary s;
  s.episodes = static_cast<int>(results.size());
  if (results.empty()) return s;
  double ndtw_acc = 0.0;
  for (const EpisodeResult& r : results) {
    s.ne_mean += navigation_error(r);
    s.sr += success(r);
    s.os += oracle_success(r);
    ndtw_acc += ndtw(r.positions, r.reference, r.success_threshold);
  }
  double n = static_cast<double>(results.size());
  s.ne_mean /= n;
  s.sr /= n;
  s.os /= n;
  s.ndtw_mean = ndtw_acc / n;
  s.spl = spl(results);
  return s;
}

void write_metrics_csv(std::ostream& out, const MetricsSummary& s) {
  out << "episodes,NE_mean,SR,OS,SPL,nDTW_mean\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", s.episodes, s.ne_mean, s.sr, s.os, s.spl,
                s.ndtw_mean);
  out << buf;
}

EpisodeResult evaluate_episode(const World& world, const Episode& ep, double d_th) {
  EpisodeResult r;
  r.goal = ep.goal;
  r.success_threshold = d_th;
  r.positions.reserve(ep.path.size());
  for (const Pose& p : ep.path) r.positions.push_back(Vec2{p.x, p.y});
  r.final_pos = r.positions.empty() ? Vec2{} : r.positions.back();
  r.path_length = 0.0;
  for (size_t i = 1; i < r.positions.size(); ++i) r.path_length += dist(r.positions[i - 1], r.positions[i]);
  r.shortest_length = shortest_path_length(world, Vec2{ep.start.x, ep.start.y}, ep.goal);
  auto cells = shortest_path_cells(world, Vec2{ep.start.x, ep.start.y}, ep.goal);
  for (const auto& [cr, cc] : cells) r.reference.push_back(world.cell_center(cr, cc));
  if (r.reference.empty()) r.reference.push_back(Vec2{ep.start.x, ep.start.y});
  return r;
}

}  // namespace navstream
