#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "core/hypothesis_graph.hpp"
#include "core/model_space.hpp"

namespace forceinfer::testing {

// tank / truck vehicles, tank-company (3..4 tanks, 50-400 m apart), tank
// battalion over three companies, company separation doctrine of 300 m.
inline ModelLibrary tank_library(double company_prior = 0.4, double battalion_prior = 0.3) {
  std::vector<ForceType> types{
      {"vehicle", Level::vehicle, std::nullopt},
      {"tracked-vehicle", Level::vehicle, "vehicle"},
      {"tank", Level::vehicle, "tracked-vehicle"},
      {"T-72-tank", Level::vehicle, "tank"},
      {"truck", Level::vehicle, "vehicle"},
      {"company", Level::array, std::nullopt},
      {"tank-company", Level::array, "company"},
      {"battalion", Level::battalion, std::nullopt},
      {"tank-battalion", Level::battalion, "battalion"},
  };
  ForceModel company{"tank-company-line", "tank-company", {{"tank", 3, 4}}, {{0, 0, 50.0, 400.0, std::nullopt}},
                     company_prior};
  ForceModel battalion{"tank-battalion-triangle", "tank-battalion", {{"tank-company", 3, 3}},
                       {{0, 0, 500.0, 3000.0, std::nullopt}}, battalion_prior};
  DoctrineConfig doctrine;
  doctrine.min_separation.push_back({"company", "company", 300.0});
  return ModelLibrary(std::move(types), {company, battalion}, std::move(doctrine));
}

// Adds a detection item and a leaf hypothesis owning it (plus `extra` items).
inline HypothesisId add_leaf(HypothesisGraph& g, const std::string& evidence_id, double lambda, double prior,
                             Point at = {}, const std::string& type = "tank",
                             std::initializer_list<std::string> extra = {}) {
  EvidenceItem item;
  item.id = EvidenceId{evidence_id};
  item.kind = EvidenceKind::detection;
  item.likelihood_ratio = lambda;
  item.location = at;
  g.add_evidence(item);
  Hypothesis h;
  h.force_type = type;
  h.level = Level::vehicle;
  h.location = at;
  h.prior = prior;
  h.own_evidence.insert(item.id);
  for (const auto& e : extra) h.own_evidence.insert(EvidenceId{e});
  return g.insert(std::move(h));
}

inline void add_detection(HypothesisGraph& g, const std::string& id, double lambda) {
  EvidenceItem item;
  item.id = EvidenceId{id};
  item.kind = EvidenceKind::detection;
  item.likelihood_ratio = lambda;
  g.add_evidence(item);
}

inline HypothesisId add_parent(HypothesisGraph& g, Level level, const std::string& type, std::vector<HypothesisId> kids,
                               double prior, std::vector<std::string> own = {}) {
  Hypothesis h;
  h.force_type = type;
  h.level = level;
  h.model = type + "-model";
  h.components = std::move(kids);
  h.prior = prior;
  for (const auto& e : own) h.own_evidence.insert(EvidenceId{e});
  return g.insert(std::move(h));
}

}  // namespace forceinfer::testing
