#include "core/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "core/errors.hpp"

namespace forceinfer {

namespace {

// Beyond this many ratios the product is accumulated in log space.
constexpr std::size_t kLogSpaceThreshold = 30;

}  // namespace

std::string_view to_string(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::detection: return "detection";
    case EvidenceKind::fit: return "fit";
    case EvidenceKind::terrain: return "terrain";
  }
  return "detection";
}

std::optional<EvidenceKind> evidence_kind_from_string(std::string_view name) {
  if (name == "detection") return EvidenceKind::detection;
  if (name == "fit") return EvidenceKind::fit;
  if (name == "terrain") return EvidenceKind::terrain;
  return std::nullopt;
}

EvidenceSet::EvidenceSet(std::initializer_list<EvidenceId> ids) : EvidenceSet(std::vector<EvidenceId>(ids)) {}

EvidenceSet::EvidenceSet(std::vector<EvidenceId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool EvidenceSet::contains(const EvidenceId& id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

bool EvidenceSet::is_subset_of(const EvidenceSet& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

void EvidenceSet::insert(EvidenceId id) {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) ids_.insert(it, std::move(id));
}

EvidenceSet set_union(const EvidenceSet& a, const EvidenceSet& b) {
  std::vector<EvidenceId> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EvidenceSet(std::move(out));
}

EvidenceSet difference(const EvidenceSet& a, const EvidenceSet& b) {
  std::vector<EvidenceId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EvidenceSet(std::move(out));
}

EvidenceSet shared(const EvidenceSet& a, const EvidenceSet& b) {
  std::vector<EvidenceId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return EvidenceSet(std::move(out));
}

const EvidenceItem& EvidenceTable::add(EvidenceItem item) {
  if (!(item.likelihood_ratio > 0.0) || !std::isfinite(item.likelihood_ratio)) {
    throw ValidationError("evidence", "item \"" + item.id.value + "\" needs a positive finite likelihood ratio");
  }
  auto [it, inserted] = items_.emplace(item.id, item);
  if (!inserted) throw ValidationError("evidence", "duplicate evidence id \"" + item.id.value + "\"");
  return it->second;
}

const EvidenceItem& EvidenceTable::at(const EvidenceId& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw ValidationError("evidence", "unknown evidence id \"" + id.value + "\"");
  return it->second;
}

double odds(double p) { return p / (1.0 - p); }

double probability_from_odds(double o) {
  if (std::isinf(o)) return 1.0;
  return o / (1.0 + o);
}

PosteriorResult posterior_from_ratios(double prior, std::span<const double> ratios) {
  if (prior <= 0.0 || prior >= 1.0) return {prior, true};
  if (ratios.empty()) return {prior, false};

  double p = 0.0;
  if (ratios.size() > kLogSpaceThreshold) {
    double log_odds = std::log(prior) - std::log1p(-prior);
    for (double r : ratios) log_odds += std::log(r);
    p = 1.0 / (1.0 + std::exp(-log_odds));
  } else {
    double o = odds(prior);
    for (double r : ratios) o *= r;
    p = probability_from_odds(o);
  }
  // Keep the result strictly inside (0, 1): finite evidence never reaches certainty.
  constexpr double kMin = std::numeric_limits<double>::denorm_min();
  p = std::clamp(p, kMin, std::nextafter(1.0, 0.0));
  return {p, false};
}

PosteriorResult posterior_from_evidence(double prior, std::span<const EvidenceItem> items) {
  std::vector<double> ratios;
  ratios.reserve(items.size());
  for (const auto& item : items) ratios.push_back(item.likelihood_ratio);
  return posterior_from_ratios(prior, ratios);
}

}  // namespace forceinfer
