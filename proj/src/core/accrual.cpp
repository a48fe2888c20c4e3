#include "core/accrual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "accrual";

// Beyond this many factors the product is taken in log space.
constexpr std::size_t kLogSpaceThreshold = 30;

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(kModule, what + " outside [0,1]");
}

double product(const std::vector<TraceEntry>& factors) {
  for (const auto& f : factors) {
    if (f.value == 0.0) return 0.0;
  }
  if (factors.size() > kLogSpaceThreshold) {
    double log_sum = 0.0;
    for (const auto& f : factors) log_sum += std::log(f.value);
    return std::exp(log_sum);
  }
  double raw = 1.0;
  for (const auto& f : factors) raw *= f.value;
  return raw;
}

struct Evaluation {
  double posterior = 0.0;
  bool out_of_range = false;
  AccrualTrace trace;
};

bool in_keep(const EvidenceSet* keep, const EvidenceId& id) { return keep == nullptr || keep->contains(id); }

std::vector<double> ratios_of(const std::vector<EvidenceItem>& items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(i.likelihood_ratio);
  return out;
}

Evaluation evaluate(const HypothesisGraph& g, HypothesisId id, const EvidenceSet* keep,
                    const AccrualSettings& settings, bool force_skip);

// Posterior of a component as seen by its parent under `keep`.
double component_posterior(const HypothesisGraph& g, HypothesisId c, const EvidenceSet* keep,
                           const AccrualSettings& settings) {
  const Hypothesis& h = g.at(c);
  if (keep == nullptr || g.evidence_closure(c).is_subset_of(*keep)) {
    if (h.posterior) return *h.posterior;
    if (keep == nullptr) {
      throw ValidationError(kModule, "missing component posterior for " + to_string(c));
    }
  }
  const EvidenceSet restricted = shared(*keep, g.evidence_closure(c));
  return evaluate(g, c, &restricted, settings, false).posterior;
}

Evaluation evaluate_leaf(const HypothesisGraph& g, const Hypothesis& h, const EvidenceSet* keep) {
  std::vector<EvidenceItem> items;
  for (const auto& e : h.own_evidence) {
    const auto& item = g.evidence().at(e);
    if (item.kind != EvidenceKind::terrain && in_keep(keep, e)) items.push_back(item);
  }
  const auto result = posterior_from_evidence(h.prior, items);

  Evaluation ev;
  ev.posterior = result.value;
  ev.trace.mode = AccrualMode::leaf;
  ev.trace.inputs.push_back({"P(C)", std::nullopt, h.prior});
  if (result.degenerate_prior) {
    ev.trace.inputs.push_back({"degenerate_prior", std::nullopt, 1.0});
    ev.trace.factors.push_back({"P(C)", std::nullopt, h.prior});
    ev.trace.raw = h.prior;
    return ev;
  }
  ev.trace.factors.push_back({"odds(P(C))", std::nullopt, odds(h.prior)});
  for (std::size_t i = 0; i < items.size(); ++i) {
    ev.trace.factors.push_back({"lambda(" + items[i].id.value + ")", std::nullopt, items[i].likelihood_ratio});
  }
  ev.trace.raw = product(ev.trace.factors);
  return ev;
}

struct ComponentView {
  double p_c;
  double p_ce;
  double p_ct;
  double p_cet;
};

ComponentView view_component(const HypothesisGraph& g, HypothesisId c, const EvidenceSet* keep,
                             const AccrualSettings& settings) {
  const Hypothesis& comp = g.at(c);
  ComponentView v{};
  v.p_c = comp.prior;
  v.p_ce = component_posterior(g, c, keep, settings);
  const auto terrain = ratios_of(own_items_of_kind(g, c, EvidenceKind::terrain, keep));
  v.p_ct = posterior_from_ratios(v.p_c, terrain).value;
  v.p_cet = posterior_from_ratios(v.p_ce, terrain).value;
  return v;
}

Evaluation evaluate_accrue(const HypothesisGraph& g, const Hypothesis& h, const EvidenceSet* keep,
                           const AccrualSettings& settings) {
  AccrualInputs in;
  in.p_h = h.prior;
  const auto fit = own_items_of_kind(g, h.id, EvidenceKind::fit, keep);
  if (!fit.empty() && h.fit_score) {
    in.fit_num = settings.calibration.numerator(*h.fit_score);
    in.fit_den = settings.calibration.denominator(*h.fit_score);
  }
  for (const auto& c : h.components) {
    const auto v = view_component(g, c, keep, settings);
    in.per_component.push_back({v.p_ce, v.p_ct, v.p_cet, v.p_c});
  }
  AccrualResult r;
  try {
    r = accrue_parent(in);
  } catch (const ValidationError& e) {
    throw ValidationError(kModule, to_string(h.id) + ": " + e.what());
  }
  return {r.posterior, r.out_of_range, std::move(r.trace)};
}

// Clamp used only for likelihood ratios inside the skip form, where a
// component posterior of exactly 0 or 1 would give an infinite ratio.
double interior(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

Evaluation evaluate_skip(const HypothesisGraph& g, const Hypothesis& h, const EvidenceSet* keep,
                         const AccrualSettings& settings) {
  Evaluation ev;
  ev.trace.mode = AccrualMode::skip;
  const double p_h = h.prior;
  ev.trace.inputs.push_back({"P(H)", std::nullopt, p_h});
  if (p_h <= 0.0 || p_h >= 1.0) {
    ev.posterior = p_h;
    ev.trace.factors.push_back({"P(H)", std::nullopt, p_h});
    ev.trace.raw = p_h;
    return ev;
  }
  ev.trace.factors.push_back({"odds(P(H))", std::nullopt, odds(p_h)});
  for (const auto& f : own_items_of_kind(g, h.id, EvidenceKind::fit, keep)) {
    ev.trace.inputs.push_back({"lambda_f", std::nullopt, f.likelihood_ratio});
    ev.trace.factors.push_back({"lambda_f", std::nullopt, f.likelihood_ratio});
  }
  for (std::size_t i = 0; i < h.components.size(); ++i) {
    const auto v = view_component(g, h.components[i], keep, settings);
    // P(C | H) = 1 gives P(C) = P(H) + (1 - P(H)) q with q = P(C | not H).
    const double q = std::clamp((v.p_c - p_h) / (1.0 - p_h), 0.0, 1.0);
    const double lambda = odds(interior(v.p_cet)) / odds(interior(v.p_c));
    const double marginal = lambda / (q * lambda + 1.0 - q);
    ev.trace.inputs.push_back({"P(C)", i, v.p_c});
    ev.trace.inputs.push_back({"P(C|e,t)", i, v.p_cet});
    ev.trace.inputs.push_back({"P(C|not H)", i, q});
    ev.trace.factors.push_back({"lambda(C->H)", i, marginal});
  }
  ev.trace.raw = product(ev.trace.factors);
  ev.posterior = std::clamp(probability_from_odds(ev.trace.raw), 0.0, 1.0);
  return ev;
}

Evaluation evaluate(const HypothesisGraph& g, HypothesisId id, const EvidenceSet* keep,
                    const AccrualSettings& settings, bool force_skip) {
  const Hypothesis& h = g.at(id);
  if (h.components.empty()) return evaluate_leaf(g, h, keep);
  const bool skip = force_skip || std::any_of(h.components.begin(), h.components.end(), [&](HypothesisId c) {
                      return g.at(c).status == HypothesisStatus::skipped;
                    });
  return skip ? evaluate_skip(g, h, keep, settings) : evaluate_accrue(g, h, keep, settings);
}

void check_keep(const HypothesisGraph& g, HypothesisId id, const EvidenceSet& keep) {
  if (!keep.is_subset_of(g.evidence_closure(id))) {
    throw ValidationError(kModule, "evidence subset is not contained in the closure of " + to_string(id));
  }
}

}  // namespace

AccrualResult accrue_parent(const AccrualInputs& in) {
  check_probability(in.fit_num, "P(f|H,C)");
  check_probability(in.fit_den, "P(f|e,t)");
  check_probability(in.p_h, "P(H)");
  if (in.fit_den == 0.0) throw ValidationError(kModule, "division by zero: P(f|e,t) is 0");
  for (std::size_t i = 0; i < in.per_component.size(); ++i) {
    const auto& c = in.per_component[i];
    const std::string tag = " of component " + std::to_string(i);
    check_probability(c.p_ce, "P(C|e)" + tag);
    check_probability(c.p_ct, "P(C|t)" + tag);
    check_probability(c.p_cet, "P(C|e,t)" + tag);
    check_probability(c.p_c, "P(C)" + tag);
    if (c.p_cet == 0.0) throw ValidationError(kModule, "division by zero: P(C|e,t)" + tag + " is 0");
    if (c.p_c == 0.0) throw ValidationError(kModule, "division by zero: P(C)" + tag + " is 0");
  }

  AccrualResult r;
  auto& t = r.trace;
  t.mode = AccrualMode::accrue;
  t.inputs.push_back({"P(f|H,C)", std::nullopt, in.fit_num});
  t.inputs.push_back({"P(f|e,t)", std::nullopt, in.fit_den});
  t.inputs.push_back({"P(H)", std::nullopt, in.p_h});
  t.factors.push_back({"P(f|H,C)/P(f|e,t)", std::nullopt, in.fit_num / in.fit_den});
  for (std::size_t i = 0; i < in.per_component.size(); ++i) {
    const auto& c = in.per_component[i];
    t.inputs.push_back({"P(C|e)", i, c.p_ce});
    t.inputs.push_back({"P(C|t)", i, c.p_ct});
    t.inputs.push_back({"P(C|e,t)", i, c.p_cet});
    t.inputs.push_back({"P(C)", i, c.p_c});
    t.factors.push_back({"P(C|e)P(C|t)/P(C|e,t)", i, c.p_ce * c.p_ct / c.p_cet});
    t.factors.push_back({"P(H)/P(C)^2", i, in.p_h / (c.p_c * c.p_c)});
  }
  // Numerator and denominator are accumulated in matching order, so equal
  // inputs cancel exactly; the trace keeps the printed bracket factors.
  std::vector<double> num{in.fit_num};
  std::vector<double> den{in.fit_den};
  for (const auto& c : in.per_component) {
    num.insert(num.end(), {c.p_ce, c.p_ct, in.p_h});
    den.insert(den.end(), {c.p_cet, c.p_c, c.p_c});
  }
  if (std::find(num.begin(), num.end(), 0.0) != num.end()) {
    r.raw = 0.0;
  } else if (num.size() > kLogSpaceThreshold) {
    double log_sum = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) log_sum += std::log(num[i]) - std::log(den[i]);
    r.raw = std::exp(log_sum);
  } else {
    double n = 1.0;
    double d = 1.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
      n *= num[i];
      d *= den[i];
    }
    r.raw = n / d;
  }
  t.raw = r.raw;
  r.out_of_range = r.raw > 1.0;
  r.posterior = std::min(r.raw, 1.0);
  return r;
}

std::vector<EvidenceItem> own_items_of_kind(const HypothesisGraph& g, HypothesisId id, EvidenceKind kind,
                                            const EvidenceSet* keep) {
  std::vector<EvidenceItem> out;
  for (const auto& e : g.at(id).own_evidence) {
    const auto& item = g.evidence().at(e);
    if (item.kind == kind && in_keep(keep, e)) out.push_back(item);
  }
  return out;
}

double posterior_given_subset(const HypothesisGraph& g, HypothesisId id, const EvidenceSet& keep,
                              const AccrualSettings& settings) {
  check_keep(g, id, keep);
  return evaluate(g, id, &keep, settings, false).posterior;
}

double skip_posterior(const HypothesisGraph& g, HypothesisId id, const AccrualSettings& settings) {
  return skip_posterior(g, id, g.evidence_closure(id), settings);
}

double skip_posterior(const HypothesisGraph& g, HypothesisId id, const EvidenceSet& keep,
                      const AccrualSettings& settings) {
  check_keep(g, id, keep);
  return evaluate(g, id, &keep, settings, !g.at(id).components.empty()).posterior;
}

void propagate_level(HypothesisGraph& g, Level level, const AccrualSettings& settings) {
  const std::vector<HypothesisId> ids = g.at_level(level);
  for (const auto& id : ids) {
    if (g.at(id).status == HypothesisStatus::excluded) continue;
    auto ev = evaluate(g, id, nullptr, settings, false);
    g.set_posterior(id, ev.posterior, std::move(ev.trace), ev.out_of_range);
  }
}

void propagate_hypotheses(HypothesisGraph& g, std::vector<HypothesisId> ids, const AccrualSettings& settings) {
  std::sort(ids.begin(), ids.end(), [&](HypothesisId a, HypothesisId b) {
    const int la = static_cast<int>(g.at(a).level);
    const int lb = static_cast<int>(g.at(b).level);
    return la != lb ? la < lb : a < b;
  });
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const auto& id : ids) {
    if (g.at(id).status == HypothesisStatus::excluded) continue;
    auto ev = evaluate(g, id, nullptr, settings, false);
    g.set_posterior(id, ev.posterior, std::move(ev.trace), ev.out_of_range);
  }
}

}  // namespace forceinfer
