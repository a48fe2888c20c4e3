#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/accrual.hpp"
#include "core/evidence.hpp"
#include "core/hypothesis_graph.hpp"
#include "core/model_space.hpp"

namespace forceinfer {

enum class ConflictReason { shared_evidence, too_close, orientation };
std::string_view to_string(ConflictReason reason);

struct PairConflict {
  HypothesisId a;
  HypothesisId b;
  std::vector<ConflictReason> reasons;
  std::size_t shared_count = 0;  // shared non-terrain evidence items
};

// A connected component (n >= 2) of the same-level conflict graph.
struct ConflictSet {
  Level level = Level::vehicle;
  std::vector<HypothesisId> members;  // ascending
  EvidenceSet pooled_evidence;        // union of member closures
  std::vector<PairConflict> pairs;    // conflicting pairs only

  bool conflicting(HypothesisId a, HypothesisId b) const;
};

// Edges: shared non-terrain closure evidence, separation below the doctrine
// minimum, or heading difference beyond the doctrine limit. Excluded
// hypotheses take no part.
std::vector<ConflictSet> detect_conflicts(const HypothesisGraph& g, const ModelLibrary& lib, Level level);

enum class OrderingHeuristic { most_matches, highest_prior, highest_posterior };
std::string_view to_string(OrderingHeuristic h);
std::optional<OrderingHeuristic> heuristic_from_string(std::string_view name);

// Ascending score with ties by id, so the best-supported member comes last and
// is conditioned on the fullest evidence.
std::vector<HypothesisId> order_hypotheses(const ConflictSet& s, const HypothesisGraph& g, OrderingHeuristic heuristic);

struct ApproxJoint {
  double k = 1.0;
  std::vector<EvidenceSet> conditioning;  // per ordered member: pooled minus closures of later members
  std::vector<double> factors;
};

// k = prod_i P(C_i | e - U_{j>i} closure(C_j)). A factor whose conditioning
// set misses the member's closure entirely is the member's prior.
ApproxJoint approx_joint(const ConflictSet& s, const std::vector<HypothesisId>& ordering, const HypothesisGraph& g,
                         const AccrualSettings& settings = {});

// (1 - k) / k; +infinity for k == 0. Throws ValidationError outside [0, 1].
double conflict_measure(double k);

// P(H | e) * (1 - k) / k, with P(H | e) from the level-skipping posterior.
double skip_error_estimate(const HypothesisGraph& g, HypothesisId parent, double k,
                           const AccrualSettings& settings = {});

struct ConsistentSet {
  std::vector<HypothesisId> included;
  double weight = 0.0;
  double normalized_belief = 0.0;
};

// Every inclusion-maximal conflict-free subset of the members, each sorted,
// in lexicographic order.
std::vector<std::vector<HypothesisId>> maximal_consistent_sets(const ConflictSet& s);

// Weighted maximal consistent sets: weight(S) = prod_{C in S} P(C) * prod_{C not in S} (1 - P(C))
// with P(C) the accrued posterior. Throws ValidationError("resolution too large")
// above max_exact members.
std::vector<ConsistentSet> resolve_exact(const ConflictSet& s, const HypothesisGraph& g, std::size_t max_exact = 20);

// Belief mass of the sets containing each member.
std::map<HypothesisId, double> disambiguated_posteriors(const std::vector<ConsistentSet>& sets);

// Exact P(all members true | pooled evidence) by enumeration over member truth
// states. Members are a priori independent with their evidence-only posteriors
// on exclusive evidence; each shared evidence region carries its likelihood
// ratio when at least one of its supporters is true.
double exact_joint(const ConflictSet& s, const HypothesisGraph& g, const AccrualSettings& settings = {},
                   std::size_t max_exact = 20);

enum class Decision { skip, resolve };
std::string_view to_string(Decision d);

struct DecideConfig {
  double tau = 0.1;
  OrderingHeuristic heuristic = OrderingHeuristic::most_matches;
  std::size_t max_exact = 20;
  double exclusion_floor = 0.05;
  AccrualSettings accrual;
};

struct ConflictReport {
  ConflictSet set;
  std::vector<HypothesisId> ordering;
  std::vector<EvidenceSet> conditioning;
  std::vector<double> factors;
  double k = 1.0;
  double measure = 0.0;  // +infinity when k == 0
  Decision decision = Decision::resolve;
  std::map<HypothesisId, double> skip_error_estimates;  // parent -> estimate
  std::optional<double> exact_joint;
  std::map<HypothesisId, double> realized_skip_errors;  // parent -> |P(H|e) - P(H|e)/P_exact|
  std::vector<ConsistentSet> consistent_sets;
  std::map<HypothesisId, double> resolved_posteriors;
  std::vector<std::string> diagnostics;
};

// Orders, computes k and the conflict measure, then skips iff measure < tau.
// Skipping marks members skipped and re-accrues any existing ancestors through
// the level-skipping form; resolving runs resolve_exact and excludes members
// whose disambiguated posterior falls below the exclusion floor.
ConflictReport decide(const ConflictSet& s, HypothesisGraph& g, const DecideConfig& cfg);

// Populates skip-error estimates (and realized errors when the exact joint is
// known) for every parent currently in the graph above the set's members.
void fill_skip_estimates(ConflictReport& report, const HypothesisGraph& g, const AccrualSettings& settings = {});

}  // namespace forceinfer
