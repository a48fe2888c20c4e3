#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/evidence.hpp"
#include "core/geometry.hpp"
#include "core/model_space.hpp"
#include "core/trace.hpp"

namespace forceinfer {

struct HypothesisId {
  std::uint32_t value = 0;  // 0 means "not yet assigned"

  auto operator<=>(const HypothesisId&) const = default;
};

std::string to_string(HypothesisId id);

enum class HypothesisStatus { active, skipped, excluded, confirmed };

std::string_view to_string(HypothesisStatus status);

// "There is a force of type F (deployment = model) at location L at time T."
struct Hypothesis {
  HypothesisId id;
  std::string force_type;
  Level level = Level::vehicle;
  std::optional<std::string> model;  // absent for vehicle-level leaves
  Point location;
  std::optional<double> heading;
  double time = 0.0;
  std::vector<HypothesisId> components;
  EvidenceSet own_evidence;  // detections for leaves; fit and terrain otherwise
  double prior = 0.5;
  std::optional<double> posterior;
  std::optional<double> fit_score;
  HypothesisStatus status = HypothesisStatus::active;

  // Filled by accrual and conflict resolution.
  bool out_of_range = false;
  AccrualTrace trace;
  std::optional<double> resolved_posterior;
};

// Runtime hypothesis space. Component links form a DAG that strictly descends
// levels; a hypothesis may be a component of several parents. Insertion is
// single-writer; const access is safe from many readers.
class HypothesisGraph {
 public:
  explicit HypothesisGraph(EvidenceTable evidence = {}) : evidence_(std::move(evidence)) {}

  const EvidenceTable& evidence() const { return evidence_; }
  const EvidenceItem& add_evidence(EvidenceItem item) { return evidence_.add(std::move(item)); }

  // Assigns the next id when h.id is unset. Throws ValidationError for a
  // dangling component, a level violation, or unresolvable evidence.
  HypothesisId insert(Hypothesis h);

  bool contains(HypothesisId id) const { return nodes_.contains(id); }
  const Hypothesis& at(HypothesisId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Ids at a level, in insertion order.
  const std::vector<HypothesisId>& at_level(Level level) const;
  std::vector<HypothesisId> all_ids() const;
  // Hypotheses that list `id` as a component.
  std::vector<HypothesisId> parents_of(HypothesisId id) const;

  const EvidenceSet& evidence_closure(HypothesisId id) const;
  EvidenceSet shared_evidence(HypothesisId a, HypothesisId b) const;

  void set_posterior(HypothesisId id, double posterior, AccrualTrace trace, bool out_of_range);
  void set_status(HypothesisId id, HypothesisStatus status);
  void set_resolved_posterior(HypothesisId id, double value);

 private:
  Hypothesis& mutable_at(HypothesisId id);

  EvidenceTable evidence_;
  std::map<HypothesisId, Hypothesis> nodes_;
  std::map<HypothesisId, EvidenceSet> closures_;
  std::map<HypothesisId, std::vector<HypothesisId>> parents_;
  std::vector<std::vector<HypothesisId>> by_level_ = std::vector<std::vector<HypothesisId>>(kLevelCount);
  std::uint32_t next_id_ = 1;
};

}  // namespace forceinfer
