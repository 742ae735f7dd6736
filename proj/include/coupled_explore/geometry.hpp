#pragma once

#include <cmath>
#include <numbers>

namespace coupled_explore {

struct Point2 {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Planar robot pose. theta is kept in (-pi, pi].
struct Pose2 {
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  Point2 position() const { return {x, y}; }

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace coupled_explore
