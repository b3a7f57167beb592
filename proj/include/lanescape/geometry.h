#pragma once

#include <cmath>
#include <numbers>

namespace lanescape {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians

  bool operator==(const Pose&) const = default;
};

// Wraps an angle into (-pi, pi].
inline double NormalizeAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

inline double Distance(const Pose& a, const Pose& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

// Moves `pose` sideways by `offset` (positive = left of heading).
inline Pose OffsetLaterally(const Pose& pose, double offset) {
  return {pose.x - offset * std::sin(pose.heading),
          pose.y + offset * std::cos(pose.heading), pose.heading};
}

}  // namespace lanescape
