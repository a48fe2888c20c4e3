#include "core/geometry.hpp"

#include <numbers>

namespace forceinfer {

std::optional<double> mean_heading(std::span<const double> headings_deg) {
  if (headings_deg.empty()) return std::nullopt;
  constexpr double kRad = std::numbers::pi / 180.0;
  double s = 0.0;
  double c = 0.0;
  for (double h : headings_deg) {
    s += std::sin(h * kRad);
    c += std::cos(h * kRad);
  }
  if (std::hypot(s, c) < 1e-9 * static_cast<double>(headings_deg.size())) return std::nullopt;
  double mean = std::atan2(s, c) / kRad;
  if (mean < 0.0) mean += 360.0;
  return mean;
}

}  // namespace forceinfer
