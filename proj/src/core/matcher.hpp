#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/evidence.hpp"
#include "core/geometry.hpp"
#include "core/hypothesis_graph.hpp"
#include "core/model_space.hpp"

namespace forceinfer {

struct MatchConfig {
  // Single-linkage clustering radius, meters. A per-level value overrides the default.
  double gather_radius = 500.0;
  std::map<Level, double> gather_radius_by_level;
  double min_fit = 0.5;
  int max_missing = 1;
  std::size_t max_cluster = 12;
  double rho = 0.5;     // penalty per missing required component
  double slack = 0.25;  // fraction of the interval width over which satisfaction decays
  double lambda_max = 9.0;

  double radius_for(Level level) const;
};

struct ChildGeometry {
  Point location;
  std::optional<double> heading;
};

// slot index -> members assigned to that slot
using GeometryAssignment = std::vector<std::vector<ChildGeometry>>;

int missing_slots(const ForceModel& model, const std::vector<std::size_t>& slot_counts);

// Geometric mean of per-pair constraint satisfaction, times rho^missing.
double fit_score(const GeometryAssignment& assignment, const ForceModel& model, const MatchConfig& cfg);

struct MatchCandidate {
  const ForceModel* model = nullptr;
  std::vector<std::vector<HypothesisId>> assignment;  // slot index -> child ids (ascending)
  double fit_score = 0.0;
  int missing_slots = 0;

  std::vector<HypothesisId> children() const;
};

struct MatchResult {
  std::vector<MatchCandidate> candidates;
  std::vector<std::string> diagnostics;
};

// Instantiates every model at `level` against the non-excluded hypotheses one
// level below. Children are clustered within the gather radius; inside a
// cluster each child subset takes its best slot assignment. A candidate is
// kept when it clears min_fit and max_missing and no kept candidate of the
// same model strictly contains its children. Output is sorted by descending
// fit, then model name, then child ids.
MatchResult match_level(const HypothesisGraph& g, const ModelLibrary& lib, Level level, const MatchConfig& cfg);

// λ_f = lambda_max^(2 * fit - 1)
double fit_likelihood_ratio(double fit, double lambda_max);

// Builds the parent hypothesis (prior from the model, location at the
// component centroid) and its fit evidence item. Throws ValidationError for a
// candidate below cfg.min_fit.
std::pair<Hypothesis, EvidenceItem> candidate_to_hypothesis(const MatchCandidate& c, const HypothesisGraph& g,
                                                            const ModelLibrary& lib, const MatchConfig& cfg);

}  // namespace forceinfer
