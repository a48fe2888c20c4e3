#pragma once

#include <vector>

#include "core/evidence.hpp"
#include "core/hypothesis_graph.hpp"
#include "core/trace.hpp"

namespace forceinfer {

// Inputs of the hierarchical accrual rule for a parent H over components C_i.
struct ComponentAccrualInputs {
  double p_ce = 0.5;   // P(C_i | e_i)
  double p_ct = 0.5;   // P(C_i | t_i)
  double p_cet = 0.5;  // P(C_i | e_i, t_i)
  double p_c = 0.5;    // P(C_i)
};

struct AccrualInputs {
  double fit_num = 1.0;  // P(f | H, ∧C_i)
  double fit_den = 1.0;  // P(f | ∧e_i, ∧t_i)
  std::vector<ComponentAccrualInputs> per_component;
  double p_h = 0.5;  // P(H)
};

struct AccrualResult {
  double raw = 0.0;        // right-hand side as written, unclamped
  double posterior = 0.0;  // min(raw, 1)
  bool out_of_range = false;
  AccrualTrace trace;
};

//   raw = (fit_num / fit_den) * prod_i [ (p_ce * p_ct / p_cet) * (p_h / p_c^2) ]
// Throws ValidationError for inputs outside [0,1] and for a zero fit_den,
// p_cet or p_c (the message names the component).
AccrualResult accrue_parent(const AccrualInputs& in);

// Calibration curves turning a matcher fit score into P(f | H, ∧C) and
// P(f | ∧e, ∧t). Defaults: 0.5 + 0.5 * fit and 0.5.
struct FitCalibration {
  double num_intercept = 0.5;
  double num_slope = 0.5;
  double den = 0.5;

  double numerator(double fit_score) const { return num_intercept + num_slope * fit_score; }
  double denominator(double /*fit_score*/) const { return den; }
};

struct AccrualSettings {
  FitCalibration calibration;
};

// Posterior of `id` recomputed bottom-up from only the evidence in `keep`
// (which must be a subset of the closure). Leaves combine their retained
// detections in odds form; parents run accrue_parent on restricted component
// posteriors, with the fit factor neutral when the fit item is not kept.
// Parents that have a skipped component use the level-skipping form instead.
double posterior_given_subset(const HypothesisGraph& g, HypothesisId id, const EvidenceSet& keep,
                              const AccrualSettings& settings = {});

// P(H | e) with component conditioning removed: each component's evidence acts
// on H directly through the marginal link P(C | not H). `keep` defaults to the
// full closure.
double skip_posterior(const HypothesisGraph& g, HypothesisId id, const AccrualSettings& settings = {});
double skip_posterior(const HypothesisGraph& g, HypothesisId id, const EvidenceSet& keep,
                      const AccrualSettings& settings = {});

// Computes and stores the posterior (and trace) of every non-excluded
// hypothesis at `level`. Throws ValidationError when a component has no posterior.
void propagate_level(HypothesisGraph& g, Level level, const AccrualSettings& settings = {});

// Recomputes the given hypotheses lowest level first.
void propagate_hypotheses(HypothesisGraph& g, std::vector<HypothesisId> ids, const AccrualSettings& settings = {});

// Terrain-free evidence likelihood of a node's own items: the items a leaf
// combines, and the fit item of a parent.
std::vector<EvidenceItem> own_items_of_kind(const HypothesisGraph& g, HypothesisId id, EvidenceKind kind,
                                            const EvidenceSet* keep = nullptr);

}  // namespace forceinfer
