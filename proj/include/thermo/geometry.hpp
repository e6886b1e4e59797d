#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace thermo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rotation about the image origin followed by translation:
///   x' = x cos(theta) - y sin(theta) + t_x
///   y' = x sin(theta) + y cos(theta) + t_y
/// x is the column coordinate, y the row coordinate.
struct RigidTransform2D {
  double theta = 0.0;
  double t_x = 0.0;
  double t_y = 0.0;

  RigidTransform2D() = default;
  RigidTransform2D(double theta_, double tx, double ty) : theta(normalize_angle(theta_)), t_x(tx), t_y(ty) {}

  static RigidTransform2D identity() { return {}; }

  Point2 apply(Point2 p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {p.x * c - p.y * s + t_x, p.x * s + p.y * c + t_y};
  }

  RigidTransform2D inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    // R^T (-t)
    return {-theta, -(c * t_x + s * t_y), -(-s * t_x + c * t_y)};
  }

  friend bool operator==(const RigidTransform2D&, const RigidTransform2D&) = default;
};

inline Point2 apply_transform(const RigidTransform2D& t, Point2 p) { return t.apply(p); }

/// Returns the transform equivalent to applying `first`, then `second`.
inline RigidTransform2D compose(const RigidTransform2D& second, const RigidTransform2D& first) {
  const double c = std::cos(second.theta), s = std::sin(second.theta);
  return {second.theta + first.theta, c * first.t_x - s * first.t_y + second.t_x,
          s * first.t_x + c * first.t_y + second.t_y};
}

struct KeypointPair {
  Point2 moving;
  Point2 reference;
};

using KeypointPairSet = std::vector<KeypointPair>;

}  // namespace thermo
