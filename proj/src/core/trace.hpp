#pragma once

#include <optional>
#include <string>
#include <vector>

namespace forceinfer {

// One named quantity in a posterior computation. `component` is the index of
// the component hypothesis the value belongs to, when it belongs to one.
struct TraceEntry {
  std::string symbol;
  std::optional<std::size_t> component;
  double value = 0.0;
};

enum class AccrualMode { none, leaf, accrue, skip };

// Everything needed to recompute a stored posterior by hand. For every mode the
// product of `factors` equals `raw` (for leaf and skip modes raw is in odds form).
struct AccrualTrace {
  AccrualMode mode = AccrualMode::none;
  std::vector<TraceEntry> inputs;
  std::vector<TraceEntry> factors;
  double raw = 0.0;
};

}  // namespace forceinfer
