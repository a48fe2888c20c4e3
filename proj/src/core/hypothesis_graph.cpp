#include "core/hypothesis_graph.hpp"

#include <algorithm>

#include "core/errors.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "hypothesis_graph";

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::string to_string(HypothesisId id) { return "H" + std::to_string(id.value); }

std::string_view to_string(HypothesisStatus status) {
  switch (status) {
    case HypothesisStatus::active: return "active";
    case HypothesisStatus::skipped: return "skipped";
    case HypothesisStatus::excluded: return "excluded";
    case HypothesisStatus::confirmed: return "confirmed";
  }
  return "active";
}

HypothesisId HypothesisGraph::insert(Hypothesis h) {
  if (h.id.value == 0) {
    h.id = HypothesisId{next_id_};
  } else if (nodes_.contains(h.id)) {
    throw ValidationError(kModule, "duplicate hypothesis id " + to_string(h.id));
  }
  const std::string name = to_string(h.id);

  if (h.level == Level::vehicle) {
    if (!h.components.empty()) throw ValidationError(kModule, "level violation: leaf " + name + " has components");
    if (h.model) throw ValidationError(kModule, "leaf " + name + " must not carry a model");
  } else if (h.components.empty()) {
    throw ValidationError(kModule, "non-leaf " + name + " needs at least one component");
  }
  for (const auto& c : h.components) {
    auto it = nodes_.find(c);
    if (it == nodes_.end()) throw ValidationError(kModule, "dangling component " + to_string(c) + " in " + name);
    if (static_cast<int>(it->second.level) != static_cast<int>(h.level) - 1) {
      throw ValidationError(kModule, "level violation: " + name + " (" + std::string(to_string(h.level)) +
                                         ") cannot contain " + to_string(c) + " (" +
                                         std::string(to_string(it->second.level)) + ")");
    }
  }
  if (!is_probability(h.prior)) throw ValidationError(kModule, name + ": prior outside [0,1]");
  if (h.posterior && !is_probability(*h.posterior)) {
    throw ValidationError(kModule, name + ": posterior outside [0,1]");
  }
  for (const auto& e : h.own_evidence) {
    if (!evidence_.contains(e)) {
      throw ValidationError(kModule, name + " references unknown evidence \"" + e.value + "\"");
    }
  }

  EvidenceSet closure = h.own_evidence;
  for (const auto& c : h.components) closure = set_union(closure, closures_.at(c));

  std::vector<HypothesisId> sorted = h.components;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError(kModule, name + " lists a component twice");
  }

  const HypothesisId id = h.id;
  for (const auto& c : h.components) parents_[c].push_back(id);
  by_level_[static_cast<int>(h.level)].push_back(id);
  closures_.emplace(id, std::move(closure));
  nodes_.emplace(id, std::move(h));
  next_id_ = std::max(next_id_, id.value + 1);
  return id;
}

const Hypothesis& HypothesisGraph::at(HypothesisId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ValidationError(kModule, "unknown hypothesis " + to_string(id));
  return it->second;
}

Hypothesis& HypothesisGraph::mutable_at(HypothesisId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ValidationError(kModule, "unknown hypothesis " + to_string(id));
  return it->second;
}

const std::vector<HypothesisId>& HypothesisGraph::at_level(Level level) const {
  return by_level_[static_cast<int>(level)];
}

std::vector<HypothesisId> HypothesisGraph::all_ids() const {
  std::vector<HypothesisId> out;
  out.reserve(nodes_.size());
  for (const auto& [id, _] : nodes_) out.push_back(id);
  return out;
}

std::vector<HypothesisId> HypothesisGraph::parents_of(HypothesisId id) const {
  (void)at(id);
  auto it = parents_.find(id);
  return it == parents_.end() ? std::vector<HypothesisId>{} : it->second;
}

const EvidenceSet& HypothesisGraph::evidence_closure(HypothesisId id) const {
  auto it = closures_.find(id);
  if (it == closures_.end()) throw ValidationError(kModule, "unknown hypothesis " + to_string(id));
  return it->second;
}

EvidenceSet HypothesisGraph::shared_evidence(HypothesisId a, HypothesisId b) const {
  return shared(evidence_closure(a), evidence_closure(b));
}

void HypothesisGraph::set_posterior(HypothesisId id, double posterior, AccrualTrace trace, bool out_of_range) {
  if (!is_probability(posterior)) throw ValidationError(kModule, to_string(id) + ": posterior outside [0,1]");
  auto& h = mutable_at(id);
  h.posterior = posterior;
  h.trace = std::move(trace);
  h.out_of_range = out_of_range;
}

void HypothesisGraph::set_status(HypothesisId id, HypothesisStatus status) { mutable_at(id).status = status; }

void HypothesisGraph::set_resolved_posterior(HypothesisId id, double value) {
  mutable_at(id).resolved_posterior = value;
}

}  // namespace forceinfer
