#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/geometry.hpp"

namespace forceinfer {

struct EvidenceId {
  std::string value;

  auto operator<=>(const EvidenceId&) const = default;
};

enum class EvidenceKind { detection, fit, terrain };

std::string_view to_string(EvidenceKind kind);
std::optional<EvidenceKind> evidence_kind_from_string(std::string_view name);

// λ = P(item | supported hypothesis) / P(item | its negation).
struct EvidenceItem {
  EvidenceId id;
  EvidenceKind kind = EvidenceKind::detection;
  double likelihood_ratio = 1.0;
  std::optional<Point> location;
  std::optional<double> heading;
  std::string sensor_context;
};

// Ordered set of evidence ids with value semantics.
class EvidenceSet {
 public:
  EvidenceSet() = default;
  EvidenceSet(std::initializer_list<EvidenceId> ids);
  explicit EvidenceSet(std::vector<EvidenceId> ids);

  bool contains(const EvidenceId& id) const;
  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  bool is_subset_of(const EvidenceSet& other) const;

  void insert(EvidenceId id);

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<EvidenceId>& ids() const { return ids_; }

  friend bool operator==(const EvidenceSet&, const EvidenceSet&) = default;

 private:
  std::vector<EvidenceId> ids_;  // sorted, unique
};

EvidenceSet set_union(const EvidenceSet& a, const EvidenceSet& b);
EvidenceSet difference(const EvidenceSet& a, const EvidenceSet& b);
EvidenceSet shared(const EvidenceSet& a, const EvidenceSet& b);

// Registry of every evidence atom in a run. Items are immutable once added.
class EvidenceTable {
 public:
  // Throws ValidationError on a duplicate id or a non-positive / non-finite λ.
  const EvidenceItem& add(EvidenceItem item);
  bool contains(const EvidenceId& id) const { return items_.contains(id); }
  const EvidenceItem& at(const EvidenceId& id) const;
  std::size_t size() const { return items_.size(); }
  const std::map<EvidenceId, EvidenceItem>& items() const { return items_; }

 private:
  std::map<EvidenceId, EvidenceItem> items_;
};

struct PosteriorResult {
  double value = 0.0;
  // Prior was exactly 0 or 1, so evidence could not move it.
  bool degenerate_prior = false;
};

// Odds-form naive-Bayes combination: odds(posterior) = odds(prior) * prod(λ).
PosteriorResult posterior_from_ratios(double prior, std::span<const double> ratios);
PosteriorResult posterior_from_evidence(double prior, std::span<const EvidenceItem> items);

double odds(double p);
double probability_from_odds(double o);

}  // namespace forceinfer
