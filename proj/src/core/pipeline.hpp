#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/accrual.hpp"
#include "core/conflict.hpp"
#include "core/hypothesis_graph.hpp"
#include "core/matcher.hpp"
#include "core/model_space.hpp"
#include "core/scenario.hpp"

namespace forceinfer {

struct RunConfig {
  std::string library;   // as written in the config
  std::string scenario;
  std::string output;
  std::string base_dir;  // directory relative paths resolve against
  MatchConfig matcher;
  double tau = 0.1;
  OrderingHeuristic heuristic = OrderingHeuristic::most_matches;
  double exclusion_floor = 0.05;
  std::size_t max_exact = 20;
  double leaf_prior = 0.5;
  FitCalibration calibration;
  std::uint64_t seed = 0;

  std::string resolve(const std::string& path) const;
  // Throws ValidationError: tau <= 0, priors or floors outside (0, 1).
  void validate() const;
};

RunConfig parse_run_config(std::string_view text, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

struct Inference {
  HypothesisGraph graph;
  std::vector<ConflictReport> conflicts;
  std::vector<std::string> diagnostics;
};

// load -> leaves -> per level ascending: match, propagate, conflicts, decide.
Inference run_inference(const ModelLibrary& lib, const Scenario& scenario, const RunConfig& cfg);

inline constexpr int kReportSchemaVersion = 1;

std::string report_json(const Inference& inf, const Scenario& scenario, const RunConfig& cfg);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<OrderingHeuristic> heuristic;
  std::optional<std::string> output;
};

// Loads the config, applies overrides, runs, writes the report to the output
// path (when one is set) and returns the report text.
std::string infer_from_config(const std::string& config_path, const RunOverrides& overrides = {});

}  // namespace forceinfer
