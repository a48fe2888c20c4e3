#include "core/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "scenario";

using json_util::json;

double num(const json& obj, std::string_view key, const std::string& ctx) {
  return json_util::number(json_util::require(obj, key, kModule, ctx), kModule, ctx + "." + std::string(key));
}

double num_or(const json& obj, std::string_view key, double fallback, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return json_util::number(*it, kModule, ctx + "." + std::string(key));
}

std::optional<double> opt_num(const json& obj, std::string_view key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return json_util::number(*it, kModule, ctx + "." + std::string(key));
}

std::string str(const json& obj, std::string_view key, const std::string& ctx) {
  return json_util::string(json_util::require(obj, key, kModule, ctx), kModule, ctx + "." + std::string(key));
}

Level parse_level(const json& obj, const std::string& ctx) {
  auto it = obj.find("level");
  if (it == obj.end()) return Level::vehicle;
  const auto name = json_util::string(*it, kModule, ctx + ".level");
  const auto level = level_from_string(name);
  if (!level) throw ParseError(kModule, ctx + ": unknown level \"" + name + "\"");
  return *level;
}

TerrainItem parse_terrain(const json& t) {
  json_util::expect_keys(t, {"id", "x", "y", "radius", "lambda", "level"}, kModule, "terrain");
  TerrainItem out;
  out.item.id = EvidenceId{str(t, "id", "terrain")};
  const std::string ctx = "terrain \"" + out.item.id.value + "\"";
  out.item.kind = EvidenceKind::terrain;
  out.item.location = Point{num(t, "x", ctx), num(t, "y", ctx)};
  out.item.likelihood_ratio = num(t, "lambda", ctx);
  out.radius = num(t, "radius", ctx);
  out.level = parse_level(t, ctx);
  if (!(out.item.likelihood_ratio > 0.0) || !std::isfinite(out.item.likelihood_ratio)) {
    throw ValidationError(kModule, ctx + ": lambda must be positive and finite");
  }
  if (out.radius < 0.0) throw ValidationError(kModule, ctx + ": negative radius");
  return out;
}

json terrain_json(const EvidenceItem& item, double radius, Level level) {
  return json{{"id", item.id.value},
              {"x", item.location->x},
              {"y", item.location->y},
              {"radius", radius},
              {"lambda", item.likelihood_ratio},
              {"level", std::string(to_string(level))}};
}

TruthNode parse_node(const json& n) {
  json_util::expect_keys(n, {"id", "model", "type", "x", "y", "heading", "components"}, kModule, "force");
  TruthNode node;
  node.id = str(n, "id", "force");
  const std::string ctx = "force \"" + node.id + "\"";
  if (auto it = n.find("model"); it != n.end()) {
    node.model = json_util::string(*it, kModule, ctx + ".model");
    if (auto t = n.find("type"); t != n.end()) node.type = json_util::string(*t, kModule, ctx + ".type");
    const auto& comps = json_util::require(n, "components", kModule, ctx);
    if (!comps.is_array() || comps.empty()) throw ParseError(kModule, ctx + ": components must be a non-empty array");
    for (const auto& c : comps) node.components.push_back(parse_node(c));
  } else {
    if (n.contains("components")) throw ParseError(kModule, ctx + ": a vehicle has no components");
    node.type = str(n, "type", ctx);
    node.location = Point{num(n, "x", ctx), num(n, "y", ctx)};
  }
  node.heading = opt_num(n, "heading", ctx);
  return node;
}

json node_json(const TruthNode& n) {
  json out{{"id", n.id}};
  if (n.model) {
    out["model"] = *n.model;
    if (!n.type.empty()) out["type"] = n.type;
    json comps = json::array();
    for (const auto& c : n.components) comps.push_back(node_json(c));
    out["components"] = comps;
  } else {
    out["type"] = n.type;
    out["x"] = n.location.x;
    out["y"] = n.location.y;
  }
  if (n.heading) out["heading"] = *n.heading;
  return out;
}

json truth_json(const GroundTruth& gt) {
  json out;
  out["scenario_id"] = gt.scenario_id;
  out["area"] = {{"x_min", gt.area.x_min}, {"y_min", gt.area.y_min}, {"x_max", gt.area.x_max}, {"y_max", gt.area.y_max}};
  json forces = json::array();
  for (const auto& f : gt.forces) forces.push_back(node_json(f));
  out["forces"] = forces;
  return out;
}

void visit_vehicles(const TruthNode& n, const std::function<void(const TruthNode&)>& fn) {
  if (n.is_vehicle()) {
    fn(n);
    return;
  }
  for (const auto& c : n.components) visit_vehicles(c, fn);
}

// Force locations are centroids of component locations, the same way the
// engine places parent hypotheses.
Point location_of(const TruthNode& n) {
  if (n.is_vehicle()) return n.location;
  std::vector<Point> pts;
  for (const auto& c : n.components) pts.push_back(location_of(c));
  return centroid(pts);
}

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

}  // namespace

void NoiseSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_detect)) throw ValidationError(kModule, "p_detect outside [0, 1]");
  if (!(false_alarm_density >= 0.0)) throw ValidationError(kModule, "false_alarm_density must be >= 0");
  if (!(location_jitter >= 0.0)) throw ValidationError(kModule, "location_jitter must be >= 0");
  if (!(lambda_hit > 0.0) || !(lambda_floor > 0.0) || !(lambda_false_alarm > 0.0)) {
    throw ValidationError(kModule, "detection likelihood ratios must be positive");
  }
  if (misclassification.size() != types.size()) {
    throw ValidationError(kModule, "misclassification matrix must have one row per type");
  }
  for (std::size_t i = 0; i < misclassification.size(); ++i) {
    const auto& row = misclassification[i];
    if (row.size() != types.size()) throw ValidationError(kModule, "misclassification matrix must be square");
    double sum = 0.0;
    for (double p : row) {
      if (!prob(p)) throw ValidationError(kModule, "misclassification entry outside [0, 1]");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw ValidationError(kModule, "misclassification row \"" + types[i] + "\" does not sum to 1");
    }
  }
}

GroundTruth parse_ground_truth(std::string_view text) {
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc, {"scenario_id", "area", "forces", "terrain"}, kModule, "ground truth");
  GroundTruth gt;
  if (auto it = doc.find("scenario_id"); it != doc.end()) gt.scenario_id = json_util::string(*it, kModule, "scenario_id");
  const auto& area = json_util::require(doc, "area", kModule, "ground truth");
  json_util::expect_keys(area, {"x_min", "y_min", "x_max", "y_max"}, kModule, "area");
  gt.area = Area{num(area, "x_min", "area"), num(area, "y_min", "area"), num(area, "x_max", "area"),
                 num(area, "y_max", "area")};
  if (!(gt.area.x_max > gt.area.x_min) || !(gt.area.y_max > gt.area.y_min)) {
    throw ValidationError(kModule, "area bounds are empty");
  }
  if (auto it = doc.find("forces"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"forces\" must be an array");
    for (const auto& f : *it) gt.forces.push_back(parse_node(f));
  }
  if (auto it = doc.find("terrain"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"terrain\" must be an array");
    for (const auto& t : *it) {
      auto ti = parse_terrain(t);
      gt.terrain_radius[ti.item.id.value] = ti.radius;
      gt.terrain_level[ti.item.id.value] = ti.level;
      gt.terrain.push_back(std::move(ti.item));
    }
  }
  std::set<std::string> ids;
  for (const auto& f : gt.forces) {
    std::function<void(const TruthNode&)> check = [&](const TruthNode& n) {
      if (!ids.insert(n.id).second) throw ValidationError(kModule, "duplicate ground-truth id \"" + n.id + "\"");
      for (const auto& c : n.components) check(c);
    };
    check(f);
  }
  return gt;
}

NoiseSpec parse_noise(std::string_view text) {
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc,
                         {"p_detect", "false_alarm_density", "misclassification", "location_jitter", "seed",
                          "lambda_hit", "lambda_floor", "lambda_false_alarm"},
                         kModule, "noise");
  NoiseSpec n;
  n.p_detect = num_or(doc, "p_detect", n.p_detect, "noise");
  n.false_alarm_density = num_or(doc, "false_alarm_density", n.false_alarm_density, "noise");
  n.location_jitter = num_or(doc, "location_jitter", n.location_jitter, "noise");
  n.lambda_hit = num_or(doc, "lambda_hit", n.lambda_hit, "noise");
  n.lambda_floor = num_or(doc, "lambda_floor", n.lambda_floor, "noise");
  n.lambda_false_alarm = num_or(doc, "lambda_false_alarm", n.lambda_false_alarm, "noise");
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw ParseError(kModule, "noise.seed must be a non-negative integer");
    n.seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("misclassification"); it != doc.end()) {
    json_util::expect_keys(*it, {"types", "matrix"}, kModule, "misclassification");
    for (const auto& t : json_util::require(*it, "types", kModule, "misclassification")) {
      n.types.push_back(json_util::string(t, kModule, "misclassification.types"));
    }
    for (const auto& row : json_util::require(*it, "matrix", kModule, "misclassification")) {
      if (!row.is_array()) throw ParseError(kModule, "misclassification rows must be arrays");
      std::vector<double> r;
      for (const auto& v : row) r.push_back(json_util::number(v, kModule, "misclassification.matrix"));
      n.misclassification.push_back(std::move(r));
    }
  }
  n.validate();
  return n;
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return s;
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc, {"scenario_id", "detections", "terrain", "ground_truth"}, kModule, "scenario");
  if (auto it = doc.find("scenario_id"); it != doc.end()) s.scenario_id = json_util::string(*it, kModule, "scenario_id");
  if (auto it = doc.find("detections"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"detections\" must be an array");
    for (const auto& d : *it) {
      json_util::expect_keys(d, {"id", "type", "x", "y", "heading", "lambda", "time"}, kModule, "detection");
      Detection det;
      det.id = str(d, "id", "detection");
      const std::string ctx = "detection \"" + det.id + "\"";
      det.type = str(d, "type", ctx);
      det.location = Point{num(d, "x", ctx), num(d, "y", ctx)};
      det.heading = opt_num(d, "heading", ctx);
      det.likelihood_ratio = num(d, "lambda", ctx);
      det.time = num_or(d, "time", 0.0, ctx);
      s.detections.push_back(std::move(det));
    }
  }
  if (auto it = doc.find("terrain"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"terrain\" must be an array");
    for (const auto& t : *it) s.terrain.push_back(parse_terrain(t));
  }
  if (auto it = doc.find("ground_truth"); it != doc.end()) s.ground_truth = *it;
  return s;
}

std::vector<std::string> validate_ground_truth(GroundTruth& gt, const ModelLibrary& lib) {
  std::vector<std::string> problems;
  std::function<std::optional<Level>(TruthNode&)> check = [&](TruthNode& n) -> std::optional<Level> {
    const std::string ctx = "\"" + n.id + "\": ";
    if (n.is_vehicle()) {
      if (!lib.has_type(n.type)) {
        problems.push_back(ctx + "unknown type \"" + n.type + "\"");
        return std::nullopt;
      }
      return lib.type(n.type).level;
    }
    const ForceModel* model = lib.find_model(*n.model);
    if (!model) {
      problems.push_back(ctx + "unknown model \"" + *n.model + "\"");
      return std::nullopt;
    }
    n.type = model->models_type;
    const Level level = lib.type(n.type).level;
    std::vector<std::vector<const TruthNode*>> slots(model->slots.size());
    for (auto& c : n.components) {
      const auto child_level = check(c);
      if (!child_level) continue;
      if (level_below(level) != child_level) {
        problems.push_back(ctx + "component \"" + c.id + "\" is not one level below");
        continue;
      }
      bool placed = false;
      for (std::size_t s = 0; s < model->slots.size() && !placed; ++s) {
        if (lib.subsumes(model->slots[s].required_type, c.type) &&
            slots[s].size() < static_cast<std::size_t>(model->slots[s].count_max)) {
          slots[s].push_back(&c);
          placed = true;
        }
      }
      if (!placed) problems.push_back(ctx + "component \"" + c.id + "\" fits no open slot");
    }
    for (std::size_t s = 0; s < model->slots.size(); ++s) {
      if (slots[s].size() < static_cast<std::size_t>(model->slots[s].count_min)) {
        problems.push_back(ctx + "slot " + std::to_string(s) + " is short of its minimum count");
      }
    }
    for (const auto& con : model->constraints) {
      const auto& as = slots[con.slot_a];
      const auto& bs = slots[con.slot_b];
      for (std::size_t i = 0; i < as.size(); ++i) {
        for (std::size_t j = con.slot_a == con.slot_b ? i + 1 : 0; j < bs.size(); ++j) {
          const double d = distance(location_of(*as[i]), location_of(*bs[j]));
          if (d < con.distance_min || d > con.distance_max) {
            problems.push_back(ctx + "\"" + as[i]->id + "\" and \"" + bs[j]->id + "\" are " + std::to_string(d) +
                               " m apart");
          }
          if (con.bearing_tolerance && as[i]->heading && bs[j]->heading &&
              heading_difference(*as[i]->heading, *bs[j]->heading) > *con.bearing_tolerance) {
            problems.push_back(ctx + "\"" + as[i]->id + "\" and \"" + bs[j]->id + "\" exceed the bearing tolerance");
          }
        }
      }
    }
    return level;
  };
  for (auto& f : gt.forces) check(f);
  return problems;
}

std::string generate(const GroundTruth& gt, const NoiseSpec& noise) {
  noise.validate();
  Rng rng(noise.seed);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < noise.types.size(); ++i) row_of[noise.types[i]] = i;

  std::vector<std::string> alarm_types = noise.types;
  if (alarm_types.empty()) {
    std::set<std::string> seen;
    for (const auto& f : gt.forces) visit_vehicles(f, [&](const TruthNode& v) { seen.insert(v.type); });
    alarm_types.assign(seen.begin(), seen.end());
  }

  json detections = json::array();
  std::size_t count = 0;
  auto emit = [&](const std::string& id, const std::string& type, Point p, std::optional<double> heading,
                  double lambda) {
    json d{{"id", id}, {"type", type}, {"x", p.x}, {"y", p.y}};
    if (heading) d["heading"] = *heading;
    d["lambda"] = lambda;
    d["time"] = 0.0;
    detections.push_back(d);
  };

  for (const auto& f : gt.forces) {
    visit_vehicles(f, [&](const TruthNode& v) {
      const bool detected = rng.uniform01() < noise.p_detect;
      const double type_draw = rng.uniform01();
      const double dx = rng.normal(0.0, 1.0) * noise.location_jitter;
      const double dy = rng.normal(0.0, 1.0) * noise.location_jitter;
      if (!detected) return;
      std::string type = v.type;
      double lambda = noise.lambda_hit;
      if (auto it = row_of.find(v.type); it != row_of.end()) {
        const auto& row = noise.misclassification[it->second];
        std::size_t j = 0;
        double acc = row[0];
        while (type_draw >= acc && j + 1 < row.size()) acc += row[++j];
        if (j != it->second) {
          type = noise.types[j];
          const double diag = row[it->second];
          lambda = diag > 0.0 ? std::max(noise.lambda_floor, noise.lambda_hit * row[j] / diag) : noise.lambda_floor;
        }
      }
      emit(padded("d", ++count), type, Point{v.location.x + dx, v.location.y + dy}, v.heading, lambda);
    });
  }

  const std::uint64_t alarms = rng.poisson(noise.false_alarm_density * gt.area.square_km());
  for (std::uint64_t i = 0; i < alarms && !alarm_types.empty(); ++i) {
    const Point p{rng.uniform(gt.area.x_min, gt.area.x_max), rng.uniform(gt.area.y_min, gt.area.y_max)};
    const double heading = rng.uniform(0.0, 360.0);
    const auto& type = alarm_types[rng.below(alarm_types.size())];
    emit(padded("fa", i + 1), type, p, heading, noise.lambda_false_alarm);
  }

  json terrain = json::array();
  for (const auto& t : gt.terrain) terrain.push_back(terrain_json(t, gt.terrain_radius.at(t.id.value), gt.terrain_level.at(t.id.value)));

  json out;
  out["scenario_id"] = gt.scenario_id;
  out["detections"] = detections;
  out["terrain"] = terrain;
  out["ground_truth"] = truth_json(gt);
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

struct TruthForce {
  std::string key;  // model name, or vehicle type
  Point location;
};

struct Candidate {
  std::string id;
  std::string key;
  Point location;
};

// Kuhn's augmenting paths; returns hypothesis index -> truth index.
std::vector<int> max_matching(const std::vector<std::vector<std::size_t>>& adj, std::size_t truth_count) {
  std::vector<int> truth_to_hyp(truth_count, -1);
  std::vector<int> hyp_to_truth(adj.size(), -1);
  for (std::size_t h = 0; h < adj.size(); ++h) {
    std::vector<bool> seen(truth_count, false);
    std::function<bool(std::size_t)> augment = [&](std::size_t u) {
      for (auto t : adj[u]) {
        if (seen[t]) continue;
        seen[t] = true;
        if (truth_to_hyp[t] < 0 || augment(static_cast<std::size_t>(truth_to_hyp[t]))) {
          truth_to_hyp[t] = static_cast<int>(u);
          hyp_to_truth[u] = static_cast<int>(t);
          return true;
        }
      }
      return false;
    };
    augment(h);
  }
  return hyp_to_truth;
}

}  // namespace

std::vector<LevelMetrics> score(const json& report, const json& ground_truth, const ModelLibrary& lib,
                                const ScoreConfig& cfg) {
  GroundTruth gt = parse_ground_truth(ground_truth.dump());
  const std::string report_id = report.value("scenario_id", std::string{});
  if (report_id != gt.scenario_id) {
    throw ValidationError(kModule, "scenario mismatch: report \"" + report_id + "\" vs ground truth \"" +
                                       gt.scenario_id + "\"");
  }
  const auto problems = validate_ground_truth(gt, lib);
  if (!problems.empty()) throw ValidationError(kModule, "ground truth invalid: " + problems.front());
  const double radius = cfg.match_radius.value_or(lib.smallest_separation() ? *lib.smallest_separation() / 2.0 : 100.0);

  std::map<Level, std::vector<TruthForce>> truth;
  std::function<void(const TruthNode&)> collect = [&](const TruthNode& n) {
    const Level level = lib.type(n.type).level;
    truth[level].push_back({n.model ? *n.model : n.type, location_of(n)});
    for (const auto& c : n.components) collect(c);
  };
  for (const auto& f : gt.forces) collect(f);

  std::map<Level, std::vector<Candidate>> hyps;
  std::map<std::string, double> posterior_of;
  if (auto it = report.find("levels"); it != report.end()) {
    for (const auto& lv : *it) {
      const auto level = level_from_string(lv.at("level").get<std::string>());
      if (!level) throw ParseError(kModule, "report has an unknown level");
      for (const auto& h : lv.at("hypotheses")) {
        const std::string id = h.at("id").get<std::string>();
        posterior_of[id] = h.at("posterior").is_number() ? h.at("posterior").get<double>() : 0.0;
        if (h.at("status").get<std::string>() == "excluded") continue;
        const std::string key = h.at("model").is_string() ? h.at("model").get<std::string>() : h.at("type").get<std::string>();
        hyps[*level].push_back({id, key, Point{h.at("location").at("x").get<double>(), h.at("location").at("y").get<double>()}});
      }
    }
  }

  std::set<Level> levels;
  for (const auto& [l, _] : truth) levels.insert(l);
  for (const auto& [l, _] : hyps) levels.insert(l);

  std::vector<LevelMetrics> out;
  for (Level level : levels) {
    LevelMetrics m;
    m.level = level;
    const auto& ts = truth[level];
    const auto& hs = hyps[level];
    m.truth_count = ts.size();
    m.hypothesis_count = hs.size();
    std::vector<std::vector<std::size_t>> adj(hs.size());
    for (std::size_t h = 0; h < hs.size(); ++h) {
      for (std::size_t t = 0; t < ts.size(); ++t) {
        if (hs[h].key == ts[t].key && distance(hs[h].location, ts[t].location) <= radius) adj[h].push_back(t);
      }
    }
    const auto matching = max_matching(adj, ts.size());
    std::set<std::string> matched_ids;
    for (std::size_t h = 0; h < hs.size(); ++h) {
      if (matching[h] >= 0) matched_ids.insert(hs[h].id);
    }
    m.matched = matched_ids.size();
    m.precision = hs.empty() ? 0.0 : static_cast<double>(m.matched) / static_cast<double>(hs.size());
    m.recall = ts.empty() ? 0.0 : static_cast<double>(m.matched) / static_cast<double>(ts.size());

    if (auto it = report.find("conflicts"); it != report.end()) {
      for (const auto& c : *it) {
        if (level_from_string(c.at("level").get<std::string>()) != level) continue;
        std::vector<std::string> members;
        for (const auto& id : c.at("members")) members.push_back(id.get<std::string>());
        std::stable_sort(members.begin(), members.end(),
                         [&](const auto& a, const auto& b) { return posterior_of[a] > posterior_of[b]; });
        for (std::size_t r = 0; r < members.size(); ++r) {
          if (matched_ids.count(members[r])) m.true_ranks.push_back(r + 1);
        }
        if (c.at("decision").get<std::string>() == "skip") {
          ++m.skip_decisions;
          const auto& realized = c.at("realized_skip_errors");
          for (const auto& [parent, est] : c.at("skip_error_estimates").items()) {
            if (realized.contains(parent)) m.skip_errors.emplace_back(est.get<double>(), realized.at(parent).get<double>());
          }
        }
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace forceinfer
