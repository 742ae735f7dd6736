#pragma once

// Bundled synthetic floor plans (0.2 m cells) and the two-route decision
// fixture used to compare a known-space route with an unknown-space route.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"

namespace coupled_explore {

inline constexpr double kFixtureResolution = 0.2;
inline constexpr double kFixtureFree = 0.0;
inline constexpr double kFixtureWall = 1.0;

// Paints axis-aligned boxes (world metres, half-open) onto a grid.
class MapPainter {
 public:
  explicit MapPainter(OccupancyGrid& grid) : g_(grid) {}

  MapPainter& box(double x0, double y0, double x1, double y1, double p) {
    for (int r = 0; r < g_.height(); ++r)
      for (int c = 0; c < g_.width(); ++c) {
        const Point2 q = g_.cell_center({r, c});
        if (q.x >= x0 && q.x < x1 && q.y >= y0 && q.y < y1) g_.set_prob({r, c}, p);
      }
    return *this;
  }

  MapPainter& wall(double x0, double y0, double x1, double y1) { return box(x0, y0, x1, y1, kFixtureWall); }
  MapPainter& clear(double x0, double y0, double x1, double y1) { return box(x0, y0, x1, y1, kFixtureFree); }

  MapPainter& border(double t) {
    const double w = g_.width() * g_.resolution();
    const double h = g_.height() * g_.resolution();
    return wall(0, 0, w, t).wall(0, h - t, w, h).wall(0, 0, t, h).wall(w - t, 0, w, h);
  }

 private:
  OccupancyGrid& g_;
};

inline OccupancyGrid blank_fixture(double width_m, double height_m) {
  const int w = static_cast<int>(std::lround(width_m / kFixtureResolution));
  const int h = static_cast<int>(std::lround(height_m / kFixtureResolution));
  return OccupancyGrid(w, h, kFixtureResolution, {0.0, 0.0}, kFixtureFree);
}

// 25 x 25 m: a 3 m east-west corridor with three rooms on each side.
inline OccupancyGrid corridor_fixture() {
  OccupancyGrid g = blank_fixture(25.0, 25.0);
  MapPainter p(g);
  p.border(0.4);
  p.wall(0, 10.6, 25, 11.0).wall(0, 14.0, 25, 14.4);
  p.wall(8.2, 0, 8.6, 10.6).wall(16.4, 0, 16.8, 10.6);
  p.wall(8.2, 14.4, 8.6, 25).wall(16.4, 14.4, 16.8, 25);
  for (const double xc : {4.0, 12.5, 21.0}) p.clear(xc - 0.6, 10.6, xc + 0.6, 14.4);
  p.wall(3.6, 4.6, 4.6, 5.6).wall(20.6, 18.8, 21.6, 19.8).wall(12.0, 19.0, 13.2, 19.4);
  return g;
}

// 40 x 40 m: a 4 x 4 grid of 10 m rooms joined by doorways.
inline OccupancyGrid rooms_fixture() {
  OccupancyGrid g = blank_fixture(40.0, 40.0);
  MapPainter p(g);
  p.border(0.4);
  for (const double s : {10.0, 20.0, 30.0}) {
    p.wall(s - 0.2, 0, s + 0.2, 40);
    p.wall(0, s - 0.2, 40, s + 0.2);
  }
  for (int i = 0; i < 4; ++i) {
    const double mid = 10.0 * i + 5.0;
    for (const double s : {10.0, 20.0, 30.0}) {
      // skip a few doorways so the room graph is not a full lattice
      if ((i + static_cast<int>(s)) % 3 != 0) p.clear(s - 0.2, mid - 0.7, s + 0.2, mid + 0.7);
      if ((i * 7 + static_cast<int>(s)) % 4 != 1) p.clear(mid - 0.7, s - 0.2, mid + 0.7, s + 0.2);
    }
  }
  return g;
}

// 50 x 50 m: a 5.6 m wide ring corridor around a solid block, with pillars.
inline OccupancyGrid loop_fixture() {
  OccupancyGrid g = blank_fixture(50.0, 50.0);
  MapPainter p(g);
  p.border(0.4);
  p.wall(6.0, 6.0, 44.0, 44.0);
  for (const double t : {12.0, 25.0, 38.0}) {
    p.wall(t, 2.8, t + 0.6, 3.4).wall(t, 46.6, t + 0.6, 47.2);
    p.wall(2.8, t, 3.4, t + 0.6).wall(46.6, t, 47.2, t + 0.6);
  }
  return g;
}

inline std::vector<std::string> fixture_names() { return {"corridor", "rooms", "loop"}; }

inline OccupancyGrid named_fixture(const std::string& name) {
  if (name == "corridor") return corridor_fixture();
  if (name == "rooms") return rooms_fixture();
  if (name == "loop") return loop_fixture();
  throw std::invalid_argument("unknown fixture '" + name + "' (expected corridor, rooms or loop)");
}

// Two routes of equal length from a known start room: one along a mapped
// corridor, one along a corridor nobody has seen yet. Each ends at a frontier
// of the same size facing an unexplored room.
struct RouteChoiceFixture {
  OccupancyGrid truth;
  OccupancyGrid belief_map;
  Pose2 start;
  Point2 known_goal;    // frontier at the far end of the mapped corridor
  Point2 unknown_goal;  // frontier strip beyond the unmapped corridor
};

// p_free / p_wall are the estimated probabilities painted on known cells.
inline RouteChoiceFixture route_choice_fixture(double p_free = 0.05, double p_wall = 0.95) {
  RouteChoiceFixture f{blank_fixture(24.0, 6.0), blank_fixture(24.0, 6.0),
                       {12.0, 3.0, 0.5 * std::numbers::pi}, {}, {}};
  // ground truth: start room, two corridors, two end rooms
  MapPainter t(f.truth);
  t.border(0.4);
  t.wall(0, 1.6, 24, 2.0).wall(0, 4.0, 24, 4.4);
  t.clear(10.0, 0.4, 14.0, 5.6);
  t.clear(0.4, 0.4, 6.0, 5.6).clear(18.0, 0.4, 23.6, 5.6);
  t.wall(9.6, 0.4, 10.0, 1.6).wall(9.6, 4.4, 10.0, 5.6);
  t.wall(14.0, 0.4, 14.4, 1.6).wall(14.0, 4.4, 14.4, 5.6);

  // estimate: unknown except the start room, the west corridor and the far
  // column of the east corridor
  f.belief_map.fill(kProbUnknown);
  MapPainter b(f.belief_map);
  b.box(9.6, 0.0, 14.4, 6.0, p_wall);
  b.box(10.0, 0.4, 14.0, 5.6, p_free);
  b.box(6.0, 1.6, 10.0, 4.4, p_wall);
  b.box(6.0, 2.0, 10.0, 4.0, p_free);
  b.box(14.0, 2.0, 14.4, 4.0, kProbUnknown);  // east doorway not yet observed
  b.box(17.8, 2.0, 18.0, 4.0, p_free);
  f.known_goal = {6.1, 3.0};
  f.unknown_goal = {17.9, 3.0};
  return f;
}

}  // namespace coupled_explore
