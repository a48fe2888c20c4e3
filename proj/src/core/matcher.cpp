#include "core/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "matcher";

double interval_satisfaction(double value, double lo, double hi, double margin) {
  if (value >= lo && value <= hi) return 1.0;
  const double excess = value < lo ? lo - value : value - hi;
  if (margin <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - excess / margin);
}

double pair_satisfaction(const ChildGeometry& a, const ChildGeometry& b, const DeploymentConstraint& c,
                         const MatchConfig& cfg) {
  const double width = c.distance_max - c.distance_min;
  double s = interval_satisfaction(distance(a.location, b.location), c.distance_min, c.distance_max,
                                   cfg.slack * width);
  if (c.bearing_tolerance && a.heading && b.heading) {
    const double tol = *c.bearing_tolerance;
    s *= interval_satisfaction(heading_difference(*a.heading, *b.heading), 0.0, tol, cfg.slack * tol);
  }
  return s;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Child {
  HypothesisId id;
  std::string type;
  ChildGeometry geometry;
};

struct SubsetSearch {
  const ForceModel& model;
  const ModelLibrary& lib;
  const MatchConfig& cfg;
  const std::vector<const Child*>& members;
  std::vector<std::vector<bool>> compatible;  // member -> slot

  std::vector<std::size_t> current;
  std::vector<std::size_t> counts;
  std::optional<std::vector<std::size_t>> best;
  double best_fit = -1.0;

  void run(std::size_t i) {
    if (i == members.size()) {
      GeometryAssignment geo(model.slots.size());
      for (std::size_t k = 0; k < members.size(); ++k) geo[current[k]].push_back(members[k]->geometry);
      const double f = fit_score(geo, model, cfg);
      if (f > best_fit) {
        best_fit = f;
        best = current;
      }
      return;
    }
    for (std::size_t s = 0; s < model.slots.size(); ++s) {
      if (!compatible[i][s] || counts[s] >= static_cast<std::size_t>(model.slots[s].count_max)) continue;
      current[i] = s;
      ++counts[s];
      run(i + 1);
      --counts[s];
    }
  }
};

}  // namespace

double MatchConfig::radius_for(Level level) const {
  auto it = gather_radius_by_level.find(level);
  return it == gather_radius_by_level.end() ? gather_radius : it->second;
}

int missing_slots(const ForceModel& model, const std::vector<std::size_t>& slot_counts) {
  int missing = 0;
  for (std::size_t s = 0; s < model.slots.size(); ++s) {
    const int have = s < slot_counts.size() ? static_cast<int>(slot_counts[s]) : 0;
    missing += std::max(0, model.slots[s].count_min - have);
  }
  return missing;
}

double fit_score(const GeometryAssignment& assignment, const ForceModel& model, const MatchConfig& cfg) {
  double log_sum = 0.0;
  std::size_t n = 0;
  bool zero = false;
  for (const auto& c : model.constraints) {
    if (c.slot_a >= assignment.size() || c.slot_b >= assignment.size()) continue;
    const auto& as = assignment[c.slot_a];
    const auto& bs = assignment[c.slot_b];
    for (std::size_t i = 0; i < as.size(); ++i) {
      // Within one slot each unordered pair counts once.
      for (std::size_t j = c.slot_a == c.slot_b ? i + 1 : 0; j < bs.size(); ++j) {
        const double s = pair_satisfaction(as[i], bs[j], c, cfg);
        ++n;
        if (s <= 0.0) zero = true;
        else log_sum += std::log(s);
      }
    }
  }
  double geometric = 1.0;
  if (zero) geometric = 0.0;
  else if (n > 0) geometric = std::exp(log_sum / static_cast<double>(n));

  std::vector<std::size_t> counts;
  for (const auto& slot : assignment) counts.push_back(slot.size());
  return geometric * std::pow(cfg.rho, missing_slots(model, counts));
}

std::vector<HypothesisId> MatchCandidate::children() const {
  std::vector<HypothesisId> out;
  for (const auto& slot : assignment) out.insert(out.end(), slot.begin(), slot.end());
  std::sort(out.begin(), out.end());
  return out;
}

MatchResult match_level(const HypothesisGraph& g, const ModelLibrary& lib, Level level, const MatchConfig& cfg) {
  MatchResult result;
  const auto below = level_below(level);
  if (!below) return result;

  std::vector<Child> children;
  for (const auto& id : g.at_level(*below)) {
    const auto& h = g.at(id);
    if (h.status == HypothesisStatus::excluded) continue;
    children.push_back({id, h.force_type, {h.location, h.heading}});
  }
  std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) { return a.id < b.id; });
  if (children.empty()) return result;

  const double radius = cfg.radius_for(level);
  UnionFind uf(children.size());
  for (std::size_t i = 0; i < children.size(); ++i) {
    for (std::size_t j = i + 1; j < children.size(); ++j) {
      if (distance(children[i].geometry.location, children[j].geometry.location) <= radius) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<const Child*>> clusters;
  for (std::size_t i = 0; i < children.size(); ++i) clusters[uf.find(i)].push_back(&children[i]);

  const auto models = lib.models_at(level);
  for (const auto& [root, members] : clusters) {
    if (members.size() > cfg.max_cluster) {
      result.diagnostics.push_back("cluster starting at " + to_string(members.front()->id) + " has " +
                                   std::to_string(members.size()) + " members (max_cluster " +
                                   std::to_string(cfg.max_cluster) + "); skipped");
      continue;
    }
    for (const ForceModel* model : models) {
      std::vector<MatchCandidate> kept;
      const std::size_t n = members.size();
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<const Child*> subset;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (std::uint64_t{1} << i)) subset.push_back(members[i]);
        }
        SubsetSearch search{*model, lib, cfg, subset, {}, std::vector<std::size_t>(subset.size()),
                            std::vector<std::size_t>(model->slots.size(), 0), std::nullopt, -1.0};
        bool any_fits = true;
        for (const Child* c : subset) {
          std::vector<bool> row(model->slots.size());
          bool fits = false;
          for (std::size_t s = 0; s < model->slots.size(); ++s) {
            row[s] = lib.subsumes(model->slots[s].required_type, c->type);
            fits = fits || row[s];
          }
          any_fits = any_fits && fits;
          search.compatible.push_back(std::move(row));
        }
        if (!any_fits) continue;
        search.run(0);
        if (!search.best) continue;

        MatchCandidate cand;
        cand.model = model;
        cand.assignment.resize(model->slots.size());
        std::vector<std::size_t> counts(model->slots.size(), 0);
        for (std::size_t k = 0; k < subset.size(); ++k) {
          cand.assignment[(*search.best)[k]].push_back(subset[k]->id);
          ++counts[(*search.best)[k]];
        }
        cand.fit_score = search.best_fit;
        cand.missing_slots = missing_slots(*model, counts);
        if (cand.missing_slots > cfg.max_missing || cand.fit_score < cfg.min_fit) continue;
        kept.push_back(std::move(cand));
      }
      // Drop candidates strictly contained in another candidate of the same model.
      std::vector<std::vector<HypothesisId>> sets;
      for (const auto& c : kept) sets.push_back(c.children());
      for (std::size_t i = 0; i < kept.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < kept.size() && !dominated; ++j) {
          dominated = i != j && sets[j].size() > sets[i].size() &&
                      std::includes(sets[j].begin(), sets[j].end(), sets[i].begin(), sets[i].end());
        }
        if (!dominated) result.candidates.push_back(std::move(kept[i]));
      }
    }
  }

  std::sort(result.candidates.begin(), result.candidates.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
    if (a.fit_score != b.fit_score) return a.fit_score > b.fit_score;
    if (a.model->name != b.model->name) return a.model->name < b.model->name;
    return a.children() < b.children();
  });
  return result;
}

double fit_likelihood_ratio(double fit, double lambda_max) { return std::pow(lambda_max, 2.0 * fit - 1.0); }

std::pair<Hypothesis, EvidenceItem> candidate_to_hypothesis(const MatchCandidate& c, const HypothesisGraph& g,
                                                            const ModelLibrary& lib, const MatchConfig& cfg) {
  if (c.model == nullptr) throw ValidationError(kModule, "candidate without a model");
  if (c.fit_score < cfg.min_fit) {
    throw ValidationError(kModule, "candidate for \"" + c.model->name + "\" is below min_fit");
  }
  const auto kids = c.children();

  Hypothesis h;
  h.force_type = c.model->models_type;
  h.level = lib.type(h.force_type).level;
  h.model = c.model->name;
  h.components = kids;
  h.prior = c.model->prior;
  h.fit_score = c.fit_score;

  std::vector<Point> points;
  std::vector<double> headings;
  for (const auto& id : kids) {
    const auto& child = g.at(id);
    points.push_back(child.location);
    if (child.heading) headings.push_back(*child.heading);
    h.time = std::max(h.time, child.time);
  }
  h.location = centroid(points);
  if (headings.size() == kids.size()) h.heading = mean_heading(headings);

  std::string id = "fit:" + c.model->name + ":";
  for (std::size_t i = 0; i < kids.size(); ++i) id += (i ? "+" : "") + to_string(kids[i]);

  EvidenceItem fit;
  fit.id = EvidenceId{id};
  fit.kind = EvidenceKind::fit;
  fit.likelihood_ratio = fit_likelihood_ratio(c.fit_score, cfg.lambda_max);
  fit.location = h.location;
  fit.heading = h.heading;
  h.own_evidence.insert(fit.id);
  return {std::move(h), std::move(fit)};
}

}  // namespace forceinfer
