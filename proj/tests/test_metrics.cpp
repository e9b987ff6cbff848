#include <doctest.h>

#include <sstream>

#include "navstream/metrics.hpp"
#include "navstream/rng.hpp"
#include "oracles.hpp"

using namespace navstream;
using namespace navstream::testing;

namespace {

EpisodeResult straight_line_episode(double stop_short, double d_th = 3.0) {
  EpisodeResult r;
  r.goal = {10.0, 0.0};
  r.success_threshold = d_th;
  for (double x = 0.0; x <= 10.0 - stop_short + 1e-9; x += 0.5) r.positions.push_back({x, 0.0});
  r.final_pos = r.positions.back();
  r.path_length = r.final_pos.x;
  r.shortest_length = 10.0;
  r.reference = {{0.0, 0.0}, {5.0, 0.0}, {10.0, 0.0}};
  return r;
}

EpisodeResult random_result(Rng& rng) {
  EpisodeResult r;
  r.goal = {rng.next_range(-5, 5), rng.next_range(-5, 5)};
  r.success_threshold = rng.next_range(0.5, 4.0);
  int n = rng.next_int(2, 12);
  for (int i = 0; i < n; ++i) r.positions.push_back({rng.next_range(-6, 6), rng.next_range(-6, 6)});
  r.final_pos = r.positions.back();
  r.path_length = 0;
  for (int i = 1; i < n; ++i)
    r.path_length += std::hypot(r.positions[static_cast<size_t>(i)].x - r.positions[static_cast<size_t>(i) - 1].x,
                                r.positions[static_cast<size_t>(i)].y - r.positions[static_cast<size_t>(i) - 1].y);
  r.shortest_length = rng.next_range(0.5, 12.0);
  r.reference = {{0, 0}, r.goal};
  return r;
}

}  // namespace

TEST_CASE("navigation error is the final distance to goal") {
  EpisodeResult at_goal = straight_line_episode(0.0);
  CHECK(navigation_error(at_goal) == doctest::Approx(0.0));
  EpisodeResult short2 = straight_line_episode(2.0);
  CHECK(navigation_error(short2) == doctest::Approx(2.0));
}

TEST_CASE("oracle success without success when stopping far away") {
  EpisodeResult r = straight_line_episode(0.0, 1.0);
  // Walk past the goal then far away; the path grazed it.
  r.positions.push_back({10.0, 8.0});
  r.final_pos = {10.0, 8.0};
  CHECK(oracle_success(r) == 1);
  CHECK(success(r) == 0);
}

TEST_CASE("success implies oracle success") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    EpisodeResult r = random_result(rng);
    CHECK(success(r) <= oracle_success(r));
  }
}

TEST_CASE("spl rewards matching the shortest path") {
  EpisodeResult exact = straight_line_episode(0.0);
  exact.path_length = exact.shortest_length;
  std::vector<EpisodeResult> one{exact};
  CHECK(spl(one) == doctest::Approx(1.0));

  EpisodeResult twice = exact;
  twice.path_length = 2.0 * exact.shortest_length;
  std::vector<EpisodeResult> two{twice};
  CHECK(spl(two) == doctest::Approx(0.5));

  EpisodeResult degenerate = exact;
  degenerate.shortest_length = 0.0;
  std::vector<EpisodeResult> bad{degenerate};
  CHECK_THROWS_AS(spl(bad), DegenerateEpisode);
}

TEST_CASE("spl never exceeds sr") {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<EpisodeResult> results;
    int n = rng.next_int(1, 8);
    for (int i = 0; i < n; ++i) results.push_back(random_result(rng));
    double sr = 0;
    for (const auto& r : results) sr += success(r);
    sr /= static_cast<double>(n);
    CHECK(spl(results) <= sr + 1e-12);
  }
}

TEST_CASE("ndtw basics") {
  std::vector<Vec2> ref{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  CHECK(ndtw(ref, ref, 3.0) == doctest::Approx(1.0));

  double prev = 1.0;
  for (double shift : {0.5, 1.0, 2.0, 4.0}) {
    std::vector<Vec2> moved;
    for (const Vec2& p : ref) moved.push_back({p.x, p.y + shift});
    double v = ndtw(moved, ref, 3.0);
    CHECK(v < prev);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
}

TEST_CASE("ndtw matches exhaustive alignment enumeration on tiny paths") {
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    int n = rng.next_int(1, 5), m = rng.next_int(1, 5);
    std::vector<Vec2> p, r;
    for (int i = 0; i < n; ++i) p.push_back({rng.next_range(-3, 3), rng.next_range(-3, 3)});
    for (int i = 0; i < m; ++i) r.push_back({rng.next_range(-3, 3), rng.next_range(-3, 3)});
    CHECK(ndtw(p, r, 3.0) == doctest::Approx(ndtw_oracle(p, r, 3.0)).epsilon(1e-12));
  }
}

TEST_CASE("metrics are invariant under joint rigid translation") {
  Rng rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    EpisodeResult r = random_result(rng);
    double dx = rng.next_range(-20, 20), dy = rng.next_range(-20, 20);
    EpisodeResult moved = r;
    moved.goal = {r.goal.x + dx, r.goal.y + dy};
    moved.final_pos = {r.final_pos.x + dx, r.final_pos.y + dy};
    for (auto& p : moved.positions) p = {p.x + dx, p.y + dy};
    for (auto& p : moved.reference) p = {p.x + dx, p.y + dy};
    CHECK(navigation_error(moved) == doctest::Approx(navigation_error(r)).epsilon(1e-9));
    CHECK(success(moved) == success(r));
    CHECK(oracle_success(moved) == oracle_success(r));
    CHECK(ndtw(moved.positions, moved.reference, r.success_threshold) ==
          doctest::Approx(ndtw(r.positions, r.reference, r.success_threshold)).epsilon(1e-9));
  }
}

TEST_CASE("summary csv has the documented columns") {
  EpisodeResult r = straight_line_episode(0.0);
  std::vector<EpisodeResult> results{r};
  std::ostringstream out;
  write_metrics_csv(out, summarize(results));
  CHECK(out.str().rfind("episodes,NE_mean,SR,OS,SPL,nDTW_mean\n", 0) == 0);
  CHECK(out.str().find("\n1,") != std::string::npos);
}
