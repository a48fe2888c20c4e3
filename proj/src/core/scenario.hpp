#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/evidence.hpp"
#include "core/geometry.hpp"
#include "core/json_util.hpp"
#include "core/model_space.hpp"

namespace forceinfer {

struct Area {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double square_km() const { return (x_max - x_min) * (y_max - y_min) / 1e6; }
};

// One node of the ground-truth force tree: a vehicle (type, placement) or a
// force built from a model whose components are the child nodes.
struct TruthNode {
  std::string id;
  std::optional<std::string> model;  // set for forces
  std::string type;                  // vehicle type; for forces the model's type once resolved
  Point location;                    // vehicles only
  std::optional<double> heading;
  std::vector<TruthNode> components;

  bool is_vehicle() const { return !model.has_value(); }
};

struct GroundTruth {
  std::string scenario_id;
  Area area;
  std::vector<TruthNode> forces;
  std::vector<EvidenceItem> terrain;  // passed through unchanged
  std::map<std::string, double> terrain_radius;
  std::map<std::string, Level> terrain_level;
};

// Channel model from truth to detections.
struct NoiseSpec {
  double p_detect = 1.0;
  double false_alarm_density = 0.0;  // per km²
  std::vector<std::string> types;    // rows/columns of the confusion matrix
  std::vector<std::vector<double>> misclassification;
  double location_jitter = 0.0;  // meters, standard deviation
  std::uint64_t seed = 0;
  // Detection-confidence model (synthetic): λ_hit for a correct type, scaled by
  // M[i][j] / M[i][i] for a confusion to type j, never below lambda_floor.
  double lambda_hit = 9.0;
  double lambda_floor = 1.0;
  double lambda_false_alarm = 3.0;

  // Throws ValidationError: rows not summing to 1 within 1e-9, probabilities
  // outside [0, 1], negative density or jitter, non-positive λ.
  void validate() const;
};

struct Detection {
  std::string id;
  std::string type;
  Point location;
  std::optional<double> heading;
  double likelihood_ratio = 1.0;
  double time = 0.0;
};

struct TerrainItem {
  EvidenceItem item;  // kind terrain, with location
  double radius = 0.0;
  Level level = Level::vehicle;
};

struct Scenario {
  std::string scenario_id;
  std::vector<Detection> detections;
  std::vector<TerrainItem> terrain;
  std::optional<json_util::json> ground_truth;
};

GroundTruth parse_ground_truth(std::string_view text);
NoiseSpec parse_noise(std::string_view text);
Scenario parse_scenario(std::string_view text);

// Resolves each force's type from its model and checks counts, types and
// deployment distances. Returns one message per violation.
std::vector<std::string> validate_ground_truth(GroundTruth& gt, const ModelLibrary& lib);

// Scenario file text. Deterministic given noise.seed: vehicles are visited
// depth-first in file order and each consumes the same number of draws.
std::string generate(const GroundTruth& gt, const NoiseSpec& noise);

struct LevelMetrics {
  Level level = Level::vehicle;
  std::size_t truth_count = 0;
  std::size_t hypothesis_count = 0;
  std::size_t matched = 0;
  double precision = 0.0;
  double recall = 0.0;
  // Rank (1 = best) of each matched true hypothesis among its conflict set.
  std::vector<std::size_t> true_ranks;
  std::size_t skip_decisions = 0;
  std::vector<std::pair<double, double>> skip_errors;  // (estimate, realized)
};

struct ScoreConfig {
  // Location match radius; defaults to half the smallest doctrine separation
  // (100 m when the library has none).
  std::optional<double> match_radius;
};

// Matches report hypotheses to truth forces per level by maximum bipartite
// matching (same model, or same type for vehicles, within the radius).
// Throws ValidationError when the scenario ids differ.
std::vector<LevelMetrics> score(const json_util::json& report, const json_util::json& ground_truth,
                                const ModelLibrary& lib, const ScoreConfig& cfg = {});

}  // namespace forceinfer
