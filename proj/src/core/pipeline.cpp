#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "cli";

using json_util::json;

double num_or(const json& obj, std::string_view key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return json_util::number(*it, kModule, "config." + std::string(key));
}

MatchConfig parse_matcher(const json& m) {
  json_util::expect_keys(m, {"gather_radius", "min_fit", "max_missing", "max_cluster", "rho", "slack", "lambda_max"},
                         kModule, "config.matcher");
  MatchConfig cfg;
  if (auto it = m.find("gather_radius"); it != m.end()) {
    if (it->is_object()) {
      for (const auto& [name, v] : it->items()) {
        if (name == "default") {
          cfg.gather_radius = json_util::number(v, kModule, "gather_radius.default");
          continue;
        }
        const auto level = level_from_string(name);
        if (!level) throw ParseError(kModule, "gather_radius: unknown level \"" + name + "\"");
        cfg.gather_radius_by_level[*level] = json_util::number(v, kModule, "gather_radius." + name);
      }
    } else {
      cfg.gather_radius = json_util::number(*it, kModule, "gather_radius");
    }
  }
  cfg.min_fit = num_or(m, "min_fit", cfg.min_fit);
  cfg.max_missing = static_cast<int>(num_or(m, "max_missing", cfg.max_missing));
  cfg.max_cluster = static_cast<std::size_t>(num_or(m, "max_cluster", static_cast<double>(cfg.max_cluster)));
  cfg.rho = num_or(m, "rho", cfg.rho);
  cfg.slack = num_or(m, "slack", cfg.slack);
  cfg.lambda_max = num_or(m, "lambda_max", cfg.lambda_max);
  return cfg;
}

json point_json(const Point& p) { return json{{"x", p.x}, {"y", p.y}}; }

json opt_json(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json ids_json(const std::vector<HypothesisId>& ids) {
  json out = json::array();
  for (auto id : ids) out.push_back(to_string(id));
  return out;
}

json evidence_json(const EvidenceSet& s) {
  json out = json::array();
  for (const auto& id : s) out.push_back(id.value);
  return out;
}

std::string_view mode_name(AccrualMode m) {
  switch (m) {
    case AccrualMode::leaf: return "leaf";
    case AccrualMode::accrue: return "accrue";
    case AccrualMode::skip: return "skip";
    case AccrualMode::none: break;
  }
  return "none";
}

json entries_json(const std::vector<TraceEntry>& entries, const Hypothesis& h) {
  json out = json::array();
  for (const auto& e : entries) {
    json j{{"symbol", e.symbol}, {"value", finite_or_null(e.value)}};
    if (e.component) {
      j["component"] = *e.component;
      if (*e.component < h.components.size()) j["component_id"] = to_string(h.components[*e.component]);
    }
    out.push_back(j);
  }
  return out;
}

json hypothesis_json(const Hypothesis& h, std::size_t rank) {
  json j;
  j["rank"] = rank;
  j["id"] = to_string(h.id);
  j["type"] = h.force_type;
  j["model"] = h.model ? json(*h.model) : json(nullptr);
  j["location"] = point_json(h.location);
  j["heading"] = opt_json(h.heading);
  j["time"] = h.time;
  j["components"] = ids_json(h.components);
  j["own_evidence"] = evidence_json(h.own_evidence);
  j["prior"] = h.prior;
  j["posterior"] = opt_json(h.posterior);
  j["resolved_posterior"] = opt_json(h.resolved_posterior);
  j["out_of_range"] = h.out_of_range;
  j["status"] = std::string(to_string(h.status));
  j["fit_score"] = opt_json(h.fit_score);
  j["accrual_trace"] = json{{"mode", std::string(mode_name(h.trace.mode))},
                            {"inputs", entries_json(h.trace.inputs, h)},
                            {"factors", entries_json(h.trace.factors, h)},
                            {"raw", finite_or_null(h.trace.raw)}};
  return j;
}

json id_map_json(const std::map<HypothesisId, double>& m) {
  json out = json::object();
  for (const auto& [id, v] : m) out[to_string(id)] = finite_or_null(v);
  return out;
}

json conflict_json(const ConflictReport& r) {
  json j;
  j["level"] = std::string(to_string(r.set.level));
  j["members"] = ids_json(r.set.members);
  json pairs = json::array();
  for (const auto& p : r.set.pairs) {
    json reasons = json::array();
    for (auto reason : p.reasons) reasons.push_back(std::string(to_string(reason)));
    pairs.push_back(json{{"a", to_string(p.a)}, {"b", to_string(p.b)}, {"reasons", reasons}, {"shared_count", p.shared_count}});
  }
  j["pairs"] = pairs;
  j["pooled_evidence"] = evidence_json(r.set.pooled_evidence);
  j["ordering"] = ids_json(r.ordering);
  json conditioning = json::array();
  for (const auto& c : r.conditioning) conditioning.push_back(evidence_json(c));
  j["conditioning"] = conditioning;
  j["factors"] = r.factors;
  j["k"] = r.k;
  j["measure"] = finite_or_null(r.measure);
  j["infinite_conflict"] = std::isinf(r.measure);
  j["decision"] = std::string(to_string(r.decision));
  j["skip_error_estimates"] = id_map_json(r.skip_error_estimates);
  j["exact_joint"] = opt_json(r.exact_joint);
  j["realized_skip_errors"] = id_map_json(r.realized_skip_errors);
  json sets = json::array();
  for (const auto& s : r.consistent_sets) {
    sets.push_back(json{{"members", ids_json(s.included)}, {"weight", s.weight}, {"belief", s.normalized_belief}});
  }
  j["consistent_sets"] = sets;
  j["resolved_posteriors"] = id_map_json(r.resolved_posteriors);
  j["diagnostics"] = r.diagnostics;
  return j;
}

json config_json(const RunConfig& cfg) {
  json radius = json::object();
  radius["default"] = cfg.matcher.gather_radius;
  for (const auto& [level, r] : cfg.matcher.gather_radius_by_level) radius[std::string(to_string(level))] = r;
  return json{{"library", cfg.library},
              {"scenario", cfg.scenario},
              {"matcher",
               {{"gather_radius", radius},
                {"min_fit", cfg.matcher.min_fit},
                {"max_missing", cfg.matcher.max_missing},
                {"max_cluster", cfg.matcher.max_cluster},
                {"rho", cfg.matcher.rho},
                {"slack", cfg.matcher.slack},
                {"lambda_max", cfg.matcher.lambda_max}}},
              {"tau", finite_or_null(cfg.tau)},
              {"heuristic", std::string(to_string(cfg.heuristic))},
              {"exclusion_floor", cfg.exclusion_floor},
              {"max_exact", cfg.max_exact},
              {"leaf_prior", cfg.leaf_prior},
              {"calibration",
               {{"num_intercept", cfg.calibration.num_intercept},
                {"num_slope", cfg.calibration.num_slope},
                {"den", cfg.calibration.den}}}};
}

void attach_terrain(Hypothesis& h, const Scenario& scenario) {
  for (const auto& t : scenario.terrain) {
    if (t.level == h.level && distance(*t.item.location, h.location) <= t.radius) h.own_evidence.insert(t.item.id);
  }
}

}  // namespace

std::string RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

void RunConfig::validate() const {
  if (!(tau > 0.0)) throw ValidationError(kModule, "tau must be positive");
  if (!(leaf_prior > 0.0 && leaf_prior < 1.0)) throw ValidationError(kModule, "leaf_prior must lie in (0, 1)");
  if (!(exclusion_floor >= 0.0 && exclusion_floor <= 1.0)) throw ValidationError(kModule, "exclusion_floor outside [0, 1]");
  if (max_exact == 0 || max_exact > 20) throw ValidationError(kModule, "max_exact must lie in [1, 20]");
  if (!(matcher.min_fit >= 0.0 && matcher.min_fit <= 1.0)) throw ValidationError(kModule, "min_fit outside [0, 1]");
  if (!(matcher.rho > 0.0 && matcher.rho <= 1.0)) throw ValidationError(kModule, "rho must lie in (0, 1]");
  if (!(matcher.slack > 0.0)) throw ValidationError(kModule, "slack must be positive");
  if (!(matcher.lambda_max >= 1.0)) throw ValidationError(kModule, "lambda_max must be at least 1");
  if (matcher.max_missing < 0) throw ValidationError(kModule, "max_missing must be non-negative");
  if (matcher.max_cluster == 0 || matcher.max_cluster > 24) throw ValidationError(kModule, "max_cluster must lie in [1, 24]");
  const double d0 = calibration.denominator(0.0);
  if (!(d0 > 0.0 && d0 <= 1.0) || !(calibration.numerator(0.0) >= 0.0) || !(calibration.numerator(1.0) <= 1.0)) {
    throw ValidationError(kModule, "calibration must map fit scores into probabilities");
  }
}

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc,
                         {"library", "scenario", "matcher", "tau", "heuristic", "exclusion_floor", "max_exact",
                          "leaf_prior", "calibration", "output", "seed"},
                         kModule, "config");
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.library = json_util::string(json_util::require(doc, "library", kModule, "config"), kModule, "config.library");
  cfg.scenario = json_util::string(json_util::require(doc, "scenario", kModule, "config"), kModule, "config.scenario");
  if (auto it = doc.find("output"); it != doc.end()) cfg.output = json_util::string(*it, kModule, "config.output");
  if (auto it = doc.find("matcher"); it != doc.end()) cfg.matcher = parse_matcher(*it);
  cfg.tau = num_or(doc, "tau", cfg.tau);
  if (auto it = doc.find("heuristic"); it != doc.end()) {
    const auto name = json_util::string(*it, kModule, "config.heuristic");
    const auto h = heuristic_from_string(name);
    if (!h) throw ValidationError(kModule, "unknown heuristic \"" + name + "\"");
    cfg.heuristic = *h;
  }
  cfg.exclusion_floor = num_or(doc, "exclusion_floor", cfg.exclusion_floor);
  cfg.max_exact = static_cast<std::size_t>(num_or(doc, "max_exact", static_cast<double>(cfg.max_exact)));
  cfg.leaf_prior = num_or(doc, "leaf_prior", cfg.leaf_prior);
  if (auto it = doc.find("calibration"); it != doc.end()) {
    json_util::expect_keys(*it, {"num_intercept", "num_slope", "den"}, kModule, "config.calibration");
    cfg.calibration.num_intercept = num_or(*it, "num_intercept", cfg.calibration.num_intercept);
    cfg.calibration.num_slope = num_or(*it, "num_slope", cfg.calibration.num_slope);
    cfg.calibration.den = num_or(*it, "den", cfg.calibration.den);
  }
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw ParseError(kModule, "config.seed must be a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const auto text = json_util::read_file(path, kModule);
  return parse_run_config(text, std::filesystem::path(path).parent_path().string());
}

Inference run_inference(const ModelLibrary& lib, const Scenario& scenario, const RunConfig& cfg) {
  cfg.validate();
  Inference inf;
  HypothesisGraph& g = inf.graph;
  DecideConfig decide_cfg;
  decide_cfg.tau = cfg.tau;
  decide_cfg.heuristic = cfg.heuristic;
  decide_cfg.max_exact = cfg.max_exact;
  decide_cfg.exclusion_floor = cfg.exclusion_floor;
  decide_cfg.accrual.calibration = cfg.calibration;

  for (const auto& t : scenario.terrain) g.add_evidence(t.item);
  for (const auto& d : scenario.detections) {
    if (!lib.has_type(d.type)) throw ValidationError(kModule, "detection \"" + d.id + "\" has unknown type \"" + d.type + "\"");
    if (lib.type(d.type).level != Level::vehicle) {
      throw ValidationError(kModule, "detection \"" + d.id + "\" is not a vehicle-level type");
    }
    EvidenceItem item;
    item.id = EvidenceId{d.id};
    item.kind = EvidenceKind::detection;
    item.likelihood_ratio = d.likelihood_ratio;
    item.location = d.location;
    item.heading = d.heading;
    g.add_evidence(item);
    Hypothesis h;
    h.force_type = d.type;
    h.level = Level::vehicle;
    h.location = d.location;
    h.heading = d.heading;
    h.time = d.time;
    h.own_evidence.insert(item.id);
    h.prior = cfg.leaf_prior;
    attach_terrain(h, scenario);
    g.insert(std::move(h));
  }
  propagate_level(g, Level::vehicle, decide_cfg.accrual);

  auto resolve_level = [&](Level level) {
    std::vector<std::size_t> made;
    for (const auto& set : detect_conflicts(g, lib, level)) {
      inf.conflicts.push_back(decide(set, g, decide_cfg));
      made.push_back(inf.conflicts.size() - 1);
    }
    return made;
  };

  auto previous = resolve_level(Level::vehicle);
  for (auto level = level_above(Level::vehicle); level; level = level_above(*level)) {
    if (lib.models_at(*level).empty()) break;
    auto match = match_level(g, lib, *level, cfg.matcher);
    for (auto& d : match.diagnostics) inf.diagnostics.push_back(std::string(to_string(*level)) + ": " + d);
    for (const auto& c : match.candidates) {
      auto [h, fit] = candidate_to_hypothesis(c, g, lib, cfg.matcher);
      g.add_evidence(fit);
      attach_terrain(h, scenario);
      g.insert(std::move(h));
    }
    propagate_level(g, *level, decide_cfg.accrual);
    // Parents now exist, so the level below can report its skip errors.
    for (auto i : previous) fill_skip_estimates(inf.conflicts[i], g, decide_cfg.accrual);
    previous = resolve_level(*level);
  }
  return inf;
}

std::string report_json(const Inference& inf, const Scenario& scenario, const RunConfig& cfg) {
  const HypothesisGraph& g = inf.graph;
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["scenario_id"] = scenario.scenario_id;
  doc["seed"] = cfg.seed;
  doc["config"] = config_json(cfg);
  json levels = json::array();
  for (int l = 0; l < kLevelCount; ++l) {
    const Level level = static_cast<Level>(l);
    auto ids = g.at_level(level);
    if (ids.empty()) continue;
    // In-range hypotheses first, each group by descending posterior.
    std::stable_sort(ids.begin(), ids.end(), [&](HypothesisId a, HypothesisId b) {
      const auto& ha = g.at(a);
      const auto& hb = g.at(b);
      if (ha.out_of_range != hb.out_of_range) return !ha.out_of_range;
      return ha.posterior.value_or(-1.0) > hb.posterior.value_or(-1.0);
    });
    json hyps = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) hyps.push_back(hypothesis_json(g.at(ids[i]), i + 1));
    levels.push_back(json{{"level", std::string(to_string(level))}, {"hypotheses", hyps}});
  }
  doc["levels"] = levels;
  json conflicts = json::array();
  for (const auto& r : inf.conflicts) conflicts.push_back(conflict_json(r));
  doc["conflicts"] = conflicts;
  doc["diagnostics"] = inf.diagnostics;
  return doc.dump(2) + "\n";
}

std::string infer_from_config(const std::string& config_path, const RunOverrides& overrides) {
  RunConfig cfg = load_run_config(config_path);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.tau) cfg.tau = *overrides.tau;
  if (overrides.heuristic) cfg.heuristic = *overrides.heuristic;
  if (overrides.output) cfg.output = *overrides.output;
  cfg.validate();
  const ModelLibrary lib = load_library_file(cfg.resolve(cfg.library));
  const Scenario scenario = parse_scenario(json_util::read_file(cfg.resolve(cfg.scenario), kModule));
  const Inference inf = run_inference(lib, scenario, cfg);
  std::string text = report_json(inf, scenario, cfg);
  if (!cfg.output.empty()) {
    // An --out override is taken relative to the working directory.
    const std::string path = overrides.output ? cfg.output : cfg.resolve(cfg.output);
    json_util::write_file(path, text, kModule);
  }
  return text;
}

}  // namespace forceinfer
