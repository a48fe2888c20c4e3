#include "core/conflict.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

#include "core/errors.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "conflict";

std::size_t shared_non_terrain(const HypothesisGraph& g, HypothesisId a, HypothesisId b) {
  std::size_t n = 0;
  for (const auto& e : g.shared_evidence(a, b)) {
    if (g.evidence().at(e).kind != EvidenceKind::terrain) ++n;
  }
  return n;
}

double member_belief(const Hypothesis& h) { return h.posterior.value_or(h.prior); }

std::size_t supporting_items(const HypothesisGraph& g, HypothesisId id) {
  std::size_t n = 0;
  for (const auto& e : g.evidence_closure(id)) {
    if (g.evidence().at(e).kind != EvidenceKind::terrain) ++n;
  }
  return n;
}

double interior(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

}  // namespace

std::string_view to_string(ConflictReason reason) {
  switch (reason) {
    case ConflictReason::shared_evidence: return "shared_evidence";
    case ConflictReason::too_close: return "too_close";
    case ConflictReason::orientation: return "orientation";
  }
  return "shared_evidence";
}

std::string_view to_string(OrderingHeuristic h) {
  switch (h) {
    case OrderingHeuristic::most_matches: return "most_matches";
    case OrderingHeuristic::highest_prior: return "highest_prior";
    case OrderingHeuristic::highest_posterior: return "highest_posterior";
  }
  return "most_matches";
}

std::optional<OrderingHeuristic> heuristic_from_string(std::string_view name) {
  if (name == "most_matches") return OrderingHeuristic::most_matches;
  if (name == "highest_prior") return OrderingHeuristic::highest_prior;
  if (name == "highest_posterior") return OrderingHeuristic::highest_posterior;
  return std::nullopt;
}

std::string_view to_string(Decision d) { return d == Decision::skip ? "skip" : "resolve"; }

bool ConflictSet::conflicting(HypothesisId a, HypothesisId b) const {
  if (b < a) std::swap(a, b);
  return std::any_of(pairs.begin(), pairs.end(), [&](const PairConflict& p) { return p.a == a && p.b == b; });
}

std::vector<ConflictSet> detect_conflicts(const HypothesisGraph& g, const ModelLibrary& lib, Level level) {
  std::vector<HypothesisId> ids;
  for (const auto& id : g.at_level(level)) {
    if (g.at(id).status != HypothesisStatus::excluded) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<PairConflict> edges;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto& a = g.at(ids[i]);
      const auto& b = g.at(ids[j]);
      PairConflict pc{ids[i], ids[j], {}, shared_non_terrain(g, ids[i], ids[j])};
      if (pc.shared_count > 0) pc.reasons.push_back(ConflictReason::shared_evidence);
      if (auto sep = lib.min_separation(a.force_type, b.force_type);
          sep && distance(a.location, b.location) < *sep) {
        pc.reasons.push_back(ConflictReason::too_close);
      }
      if (auto limit = lib.max_heading_difference(a.force_type, b.force_type);
          limit && a.heading && b.heading && heading_difference(*a.heading, *b.heading) > *limit) {
        pc.reasons.push_back(ConflictReason::orientation);
      }
      if (!pc.reasons.empty()) edges.push_back(std::move(pc));
    }
  }

  // Connected components by repeated flooding; ids are small in practice.
  std::map<HypothesisId, std::size_t> component;
  std::size_t next = 0;
  for (const auto& id : ids) {
    if (component.contains(id)) continue;
    std::vector<HypothesisId> stack{id};
    component[id] = next;
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      for (const auto& e : edges) {
        for (auto [from, to] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
          if (from == cur && !component.contains(to)) {
            component[to] = next;
            stack.push_back(to);
          }
        }
      }
    }
    ++next;
  }

  std::vector<ConflictSet> sets(next);
  for (const auto& id : ids) sets[component[id]].members.push_back(id);
  for (auto& e : edges) sets[component[e.a]].pairs.push_back(std::move(e));

  std::vector<ConflictSet> out;
  for (auto& s : sets) {
    if (s.members.size() < 2) continue;
    s.level = level;
    for (const auto& m : s.members) s.pooled_evidence = set_union(s.pooled_evidence, g.evidence_closure(m));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<HypothesisId> order_hypotheses(const ConflictSet& s, const HypothesisGraph& g,
                                           OrderingHeuristic heuristic) {
  std::vector<std::pair<double, HypothesisId>> scored;
  for (const auto& m : s.members) {
    const auto& h = g.at(m);
    double score = 0.0;
    switch (heuristic) {
      case OrderingHeuristic::most_matches: score = static_cast<double>(supporting_items(g, m)); break;
      case OrderingHeuristic::highest_prior: score = h.prior; break;
      case OrderingHeuristic::highest_posterior: score = member_belief(h); break;
    }
    scored.emplace_back(score, m);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<HypothesisId> out;
  for (const auto& [_, id] : scored) out.push_back(id);
  return out;
}

ApproxJoint approx_joint(const ConflictSet& s, const std::vector<HypothesisId>& ordering, const HypothesisGraph& g,
                         const AccrualSettings& settings) {
  std::vector<HypothesisId> sorted = ordering;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != s.members) throw ValidationError(kModule, "ordering is not a permutation of the conflict set");

  const std::size_t n = ordering.size();
  ApproxJoint out;
  out.conditioning.resize(n);
  out.factors.resize(n);
  EvidenceSet later;  // union of closures of members after position i
  for (std::size_t i = n; i-- > 0;) {
    const auto id = ordering[i];
    out.conditioning[i] = difference(s.pooled_evidence, later);
    const EvidenceSet keep = shared(out.conditioning[i], g.evidence_closure(id));
    out.factors[i] = keep.empty() ? g.at(id).prior : posterior_given_subset(g, id, keep, settings);
    later = set_union(later, g.evidence_closure(id));
  }
  // Multiply in member-id order so k does not depend on rounding order.
  std::vector<std::pair<HypothesisId, double>> by_id;
  for (std::size_t i = 0; i < n; ++i) by_id.emplace_back(ordering[i], out.factors[i]);
  std::sort(by_id.begin(), by_id.end());
  out.k = 1.0;
  for (const auto& [_, f] : by_id) out.k *= f;
  return out;
}

double conflict_measure(double k) {
  if (!(k >= 0.0 && k <= 1.0)) throw ValidationError(kModule, "k outside [0,1]");
  if (k == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - k) / k;
}

double skip_error_estimate(const HypothesisGraph& g, HypothesisId parent, double k, const AccrualSettings& settings) {
  const double measure = conflict_measure(k);
  const double p = skip_posterior(g, parent, settings);
  if (p == 0.0 || measure == 0.0) return 0.0;
  return p * measure;
}

std::vector<std::vector<HypothesisId>> maximal_consistent_sets(const ConflictSet& s) {
  const std::size_t n = s.members.size();
  if (n > 63) throw ValidationError(kModule, "resolution too large");
  // Compatibility graph (complement of the conflict graph); its maximal
  // cliques are the maximal consistent sets. Bron-Kerbosch with pivoting.
  std::vector<std::uint64_t> compatible(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && !s.conflicting(s.members[i], s.members[j])) compatible[i] |= std::uint64_t{1} << j;
    }
  }
  std::vector<std::uint64_t> found;
  auto expand = [&](auto&& self, std::uint64_t r, std::uint64_t p, std::uint64_t x) -> void {
    if (p == 0 && x == 0) {
      found.push_back(r);
      return;
    }
    const std::uint64_t px = p | x;
    const int pivot = std::countr_zero(px);
    std::uint64_t candidates = p & ~compatible[pivot];
    while (candidates) {
      const int v = std::countr_zero(candidates);
      const std::uint64_t bit = std::uint64_t{1} << v;
      self(self, r | bit, p & compatible[v], x & compatible[v]);
      p &= ~bit;
      x |= bit;
      candidates &= ~bit;
    }
  };
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  if (n > 0) expand(expand, 0, all, 0);

  std::vector<std::vector<HypothesisId>> out;
  for (auto mask : found) {
    std::vector<HypothesisId> set;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) set.push_back(s.members[i]);
    }
    out.push_back(std::move(set));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ConsistentSet> resolve_exact(const ConflictSet& s, const HypothesisGraph& g, std::size_t max_exact) {
  if (s.members.size() > max_exact) {
    throw ValidationError(kModule, "resolution too large: " + std::to_string(s.members.size()) +
                                       " members exceed max_exact " + std::to_string(max_exact));
  }
  std::vector<ConsistentSet> out;
  double total = 0.0;
  for (auto& included : maximal_consistent_sets(s)) {
    double w = 1.0;
    for (const auto& m : s.members) {
      const double p = member_belief(g.at(m));
      w *= std::binary_search(included.begin(), included.end(), m) ? p : 1.0 - p;
    }
    total += w;
    out.push_back({std::move(included), w, 0.0});
  }
  for (auto& cs : out) {
    // All-zero weights (e.g. certain members in conflict) fall back to uniform belief.
    cs.normalized_belief = total > 0.0 ? cs.weight / total : 1.0 / static_cast<double>(out.size());
  }
  return out;
}

std::map<HypothesisId, double> disambiguated_posteriors(const std::vector<ConsistentSet>& sets) {
  std::map<HypothesisId, double> out;
  for (const auto& cs : sets) {
    for (const auto& m : cs.included) out[m] += cs.normalized_belief;
  }
  return out;
}

double exact_joint(const ConflictSet& s, const HypothesisGraph& g, const AccrualSettings& settings,
                   std::size_t max_exact) {
  const std::size_t n = s.members.size();
  if (n > max_exact || n > 30) throw ValidationError(kModule, "resolution too large");

  // Group pooled evidence by the set of members whose closure holds it.
  std::map<std::uint32_t, std::vector<EvidenceId>> regions;
  for (const auto& e : s.pooled_evidence) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (g.evidence_closure(s.members[i]).contains(e)) mask |= std::uint32_t{1} << i;
    }
    regions[mask].push_back(e);
  }

  std::vector<double> own(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = regions.find(std::uint32_t{1} << i);
    const auto& h = g.at(s.members[i]);
    own[i] = it == regions.end() ? h.prior
                                 : posterior_given_subset(g, s.members[i], EvidenceSet(it->second), settings);
  }
  std::vector<std::pair<std::uint32_t, double>> shared_regions;
  for (const auto& [mask, items] : regions) {
    if (std::popcount(mask) < 2) continue;
    const EvidenceSet region(items);
    double lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (std::uint32_t{1} << i))) continue;
      const auto& h = g.at(s.members[i]);
      const double p = posterior_given_subset(g, s.members[i], region, settings);
      lambda = std::max(lambda, odds(interior(p)) / odds(interior(h.prior)));
    }
    shared_regions.emplace_back(mask, lambda);
  }

  const std::uint32_t all = (std::uint32_t{1} << n) - 1;
  double total = 0.0;
  double all_true = 0.0;
  for (std::uint32_t state = 0; state <= all; ++state) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= (state & (std::uint32_t{1} << i)) ? own[i] : 1.0 - own[i];
    for (const auto& [mask, lambda] : shared_regions) {
      if (state & mask) w *= lambda;
    }
    total += w;
    if (state == all) all_true = w;
  }
  return total > 0.0 ? all_true / total : 0.0;
}

void fill_skip_estimates(ConflictReport& report, const HypothesisGraph& g, const AccrualSettings& settings) {
  std::set<HypothesisId> parents;
  for (const auto& m : report.set.members) {
    for (const auto& p : g.parents_of(m)) parents.insert(p);
  }
  for (const auto& p : parents) {
    if (g.at(p).status == HypothesisStatus::excluded) continue;
    report.skip_error_estimates[p] = skip_error_estimate(g, p, report.k, settings);
    if (report.exact_joint && *report.exact_joint > 0.0) {
      const double skip = skip_posterior(g, p, settings);
      const double through = std::min(1.0, skip / *report.exact_joint);
      report.realized_skip_errors[p] = std::fabs(through - skip);
    }
  }
}

ConflictReport decide(const ConflictSet& s, HypothesisGraph& g, const DecideConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw ValidationError(kModule, "conflict threshold tau must be positive");

  ConflictReport r;
  r.set = s;
  if (std::isinf(cfg.tau)) r.diagnostics.push_back("tau is infinite: every finite conflict is skipped");
  r.ordering = order_hypotheses(s, g, cfg.heuristic);
  auto approx = approx_joint(s, r.ordering, g, cfg.accrual);
  r.k = approx.k;
  r.conditioning = std::move(approx.conditioning);
  r.factors = std::move(approx.factors);
  r.measure = conflict_measure(r.k);
  r.decision = r.measure < cfg.tau ? Decision::skip : Decision::resolve;
  if (s.members.size() <= std::min<std::size_t>(cfg.max_exact, 20)) {
    r.exact_joint = exact_joint(s, g, cfg.accrual, cfg.max_exact);
  }

  if (r.decision == Decision::skip) {
    for (const auto& m : s.members) g.set_status(m, HypothesisStatus::skipped);
    // Re-accrue every existing ancestor through the level-skipping form.
    std::vector<HypothesisId> ancestors;
    std::vector<HypothesisId> frontier = s.members;
    std::set<HypothesisId> seen;
    while (!frontier.empty()) {
      const auto cur = frontier.back();
      frontier.pop_back();
      for (const auto& p : g.parents_of(cur)) {
        if (seen.insert(p).second) {
          ancestors.push_back(p);
          frontier.push_back(p);
        }
      }
    }
    propagate_hypotheses(g, ancestors, cfg.accrual);
    fill_skip_estimates(r, g, cfg.accrual);
    return r;
  }

  try {
    r.consistent_sets = resolve_exact(s, g, cfg.max_exact);
  } catch (const ValidationError& e) {
    r.diagnostics.push_back(e.what());
    return r;
  }
  r.resolved_posteriors = disambiguated_posteriors(r.consistent_sets);
  const auto best = std::max_element(r.consistent_sets.begin(), r.consistent_sets.end(),
                                     [](const ConsistentSet& a, const ConsistentSet& b) {
                                       return a.normalized_belief < b.normalized_belief;
                                     });
  for (const auto& m : s.members) {
    const double p = r.resolved_posteriors[m];
    g.set_resolved_posterior(m, p);
    if (p < cfg.exclusion_floor) {
      g.set_status(m, HypothesisStatus::excluded);
    } else if (best != r.consistent_sets.end() &&
               std::binary_search(best->included.begin(), best->included.end(), m)) {
      g.set_status(m, HypothesisStatus::confirmed);
    }
  }
  fill_skip_estimates(r, g, cfg.accrual);
  return r;
}

}  // namespace forceinfer
