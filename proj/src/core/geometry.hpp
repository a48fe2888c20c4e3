#pragma once

#include <cmath>
#include <optional>
#include <span>

namespace forceinfer {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Smallest absolute difference between two headings, in [0, 180] degrees.
inline double heading_difference(double a_deg, double b_deg) {
  double d = std::fmod(std::fabs(a_deg - b_deg), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

inline Point centroid(std::span<const Point> points) {
  Point c;
  if (points.empty()) return c;
  for (const auto& p : points) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(points.size());
  c.y /= static_cast<double>(points.size());
  return c;
}

// Circular mean of headings in degrees, normalised to [0, 360).
// Empty input or a null resultant vector has no defined mean.
std::optional<double> mean_heading(std::span<const double> headings_deg);

}  // namespace forceinfer
