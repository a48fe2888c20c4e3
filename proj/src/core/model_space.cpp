#include "core/model_space.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>

#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace forceinfer {

namespace {

const std::string kModule = "model_space";

constexpr std::array<std::string_view, kLevelCount> kLevelNames = {
    "vehicle", "array", "battalion", "regiment", "division"};

[[noreturn]] void invalid(const std::string& message) { throw ValidationError(kModule, message); }

}  // namespace

std::string_view to_string(Level level) { return kLevelNames[static_cast<int>(level)]; }

std::optional<Level> level_from_string(std::string_view name) {
  for (int i = 0; i < kLevelCount; ++i) {
    if (kLevelNames[i] == name) return static_cast<Level>(i);
  }
  return std::nullopt;
}

std::optional<Level> level_below(Level level) {
  if (level == Level::vehicle) return std::nullopt;
  return static_cast<Level>(static_cast<int>(level) - 1);
}

std::optional<Level> level_above(Level level) {
  if (level == Level::division) return std::nullopt;
  return static_cast<Level>(static_cast<int>(level) + 1);
}

ModelLibrary::ModelLibrary(std::vector<ForceType> types, std::vector<ForceModel> models,
                           DoctrineConfig doctrine)
    : types_(std::move(types)), models_(std::move(models)), doctrine_(std::move(doctrine)) {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (!type_index_.emplace(types_[i].name, i).second) {
      invalid("duplicate type \"" + types_[i].name + "\"");
    }
  }
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (!model_index_.emplace(models_[i].name, i).second) {
      invalid("duplicate model \"" + models_[i].name + "\"");
    }
  }
  validate();
}

void ModelLibrary::validate() const {
  // is-a: dangling parents, cycles, level changes.
  for (const auto& t : types_) {
    if (!t.isa_parent) continue;
    if (!has_type(*t.isa_parent)) {
      invalid("dangling type \"" + *t.isa_parent + "\" (isa parent of \"" + t.name + "\")");
    }
    if (type(*t.isa_parent).level != t.level) {
      invalid("isa level mismatch: \"" + t.name + "\" is " + std::string(to_string(t.level)) +
              " but its parent \"" + *t.isa_parent + "\" is " +
              std::string(to_string(type(*t.isa_parent).level)));
    }
  }
  for (const auto& t : types_) {
    std::set<std::string, std::less<>> seen{t.name};
    const ForceType* cur = &t;
    while (cur->isa_parent) {
      if (!seen.insert(*cur->isa_parent).second) {
        invalid("isa cycle through \"" + t.name + "\"");
      }
      cur = &type(*cur->isa_parent);
    }
  }

  // Models: references and numeric ranges.
  for (const auto& m : models_) {
    const std::string ctx = "model \"" + m.name + "\"";
    if (!has_type(m.models_type)) invalid("dangling type \"" + m.models_type + "\" in " + ctx);
    if (!(m.prior >= 0.0 && m.prior <= 1.0)) invalid(ctx + ": prior outside [0,1]");
    if (m.slots.empty()) invalid(ctx + ": at least one slot is required");
    for (const auto& s : m.slots) {
      if (!has_type(s.required_type)) {
        invalid("dangling type \"" + s.required_type + "\" in " + ctx);
      }
      if (s.count_min < 0 || s.count_max < s.count_min) {
        invalid(ctx + ": slot \"" + s.required_type + "\" has invalid count bounds");
      }
    }
    for (const auto& c : m.constraints) {
      if (c.slot_a >= m.slots.size() || c.slot_b >= m.slots.size()) {
        invalid(ctx + ": constraint references a missing slot");
      }
      if (!(c.distance_min >= 0.0 && c.distance_min <= c.distance_max)) {
        invalid(ctx + ": constraint requires 0 <= distance_min <= distance_max");
      }
      if (c.bearing_tolerance && !(*c.bearing_tolerance >= 0.0)) {
        invalid(ctx + ": negative bearing tolerance");
      }
    }
  }

  // Part-of graph over types: modelled type -> slot types. Cycles are reported
  // before level checks so a back-edge is named as what it is.
  std::map<std::string, std::set<std::string>, std::less<>> part_of;
  for (const auto& m : models_) {
    for (const auto& s : m.slots) part_of[m.models_type].insert(s.required_type);
  }
  enum class Mark { none, active, done };
  std::map<std::string, Mark, std::less<>> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    marks[node] = Mark::active;
    if (auto it = part_of.find(node); it != part_of.end()) {
      for (const auto& next : it->second) {
        const Mark mk = marks[next];
        if (mk == Mark::active) invalid("part-of cycle through \"" + next + "\"");
        if (mk == Mark::none) visit(next);
      }
    }
    marks[node] = Mark::done;
  };
  for (const auto& [node, _] : part_of) {
    if (marks[node] == Mark::none) visit(node);
  }

  for (const auto& m : models_) {
    const Level owner = type(m.models_type).level;
    for (const auto& s : m.slots) {
      const Level child = type(s.required_type).level;
      const int step = static_cast<int>(owner) - static_cast<int>(child);
      if (step > 1) {
        invalid("level skip: model \"" + m.name + "\" (" + std::string(to_string(owner)) +
                ") has slot type \"" + s.required_type + "\" (" + std::string(to_string(child)) +
                ")");
      }
      if (step < 1) {
        invalid("level violation: model \"" + m.name + "\" slot type \"" + s.required_type +
                "\" is not below " + std::string(to_string(owner)));
      }
    }
  }

  for (const auto& r : doctrine_.min_separation) {
    if (!has_type(r.type_a) || !has_type(r.type_b)) invalid("dangling type in doctrine separation rule");
    if (!(r.min_distance >= 0.0)) invalid("negative doctrine separation");
  }
  for (const auto& r : doctrine_.orientation) {
    if (!has_type(r.type_a) || !has_type(r.type_b)) invalid("dangling type in doctrine orientation rule");
    if (!(r.max_heading_difference >= 0.0)) invalid("negative doctrine heading limit");
  }
}

bool ModelLibrary::has_type(std::string_view name) const { return type_index_.contains(name); }

const ForceType& ModelLibrary::type(std::string_view name) const {
  auto it = type_index_.find(name);
  if (it == type_index_.end()) throw ValidationError(kModule, "unknown type \"" + std::string(name) + "\"");
  return types_[it->second];
}

const ForceModel* ModelLibrary::find_model(std::string_view name) const {
  auto it = model_index_.find(name);
  return it == model_index_.end() ? nullptr : &models_[it->second];
}

std::vector<const ForceModel*> ModelLibrary::models_at(Level level) const {
  std::vector<const ForceModel*> out;
  for (const auto& m : models_) {
    if (type(m.models_type).level == level) out.push_back(&m);
  }
  return out;
}

std::vector<std::string> ModelLibrary::isa_ancestors(std::string_view type_name) const {
  std::vector<std::string> chain;
  const ForceType* cur = &type(type_name);
  chain.push_back(cur->name);
  while (cur->isa_parent) {
    cur = &type(*cur->isa_parent);
    chain.push_back(cur->name);
  }
  return chain;
}

bool ModelLibrary::subsumes(std::string_view general, std::string_view specific) const {
  (void)type(general);
  const ForceType* cur = &type(specific);
  while (true) {
    if (cur->name == general) return true;
    if (!cur->isa_parent) return false;
    cur = &type(*cur->isa_parent);
  }
}

template <typename Rule>
bool ModelLibrary::rule_applies(const Rule& rule, std::string_view a, std::string_view b) const {
  return (subsumes(rule.type_a, a) && subsumes(rule.type_b, b)) ||
         (subsumes(rule.type_a, b) && subsumes(rule.type_b, a));
}

std::optional<double> ModelLibrary::min_separation(std::string_view a, std::string_view b) const {
  std::optional<double> best;
  for (const auto& r : doctrine_.min_separation) {
    if (rule_applies(r, a, b)) best = std::max(best.value_or(0.0), r.min_distance);
  }
  return best;
}

std::optional<double> ModelLibrary::max_heading_difference(std::string_view a,
                                                           std::string_view b) const {
  std::optional<double> best;
  for (const auto& r : doctrine_.orientation) {
    if (rule_applies(r, a, b)) {
      best = best ? std::min(*best, r.max_heading_difference) : r.max_heading_difference;
    }
  }
  return best;
}

std::optional<double> ModelLibrary::smallest_separation() const {
  std::optional<double> best;
  for (const auto& r : doctrine_.min_separation) {
    if (r.min_distance > 0.0) best = best ? std::min(*best, r.min_distance) : r.min_distance;
  }
  return best;
}

namespace {

using json_util::json;

std::pair<std::string, std::string> type_pair(const json& j, const std::string& ctx) {
  const json& types = json_util::require(j, "types", kModule, ctx);
  if (!types.is_array() || types.size() != 2) throw ParseError(kModule, ctx + ": \"types\" must list two type names");
  return {json_util::string(types[0], kModule, ctx), json_util::string(types[1], kModule, ctx)};
}

int count_field(const json& j, std::string_view key, int fallback, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) throw ParseError(kModule, ctx + ": \"" + std::string(key) + "\" must be an integer");
  return it->get<int>();
}

}  // namespace

ModelLibrary load_library(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return ModelLibrary{};
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc, {"types", "models", "doctrine"}, kModule, "library");

  std::vector<ForceType> types;
  if (auto it = doc.find("types"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"types\" must be an array");
    for (const auto& t : *it) {
      json_util::expect_keys(t, {"name", "level", "isa"}, kModule, "type");
      ForceType ft;
      ft.name = json_util::string(json_util::require(t, "name", kModule, "type"), kModule, "type.name");
      const std::string ctx = "type \"" + ft.name + "\"";
      const auto level_name = json_util::string(json_util::require(t, "level", kModule, ctx), kModule, ctx);
      const auto level = level_from_string(level_name);
      if (!level) throw ParseError(kModule, ctx + ": unknown level \"" + level_name + "\"");
      ft.level = *level;
      if (auto p = t.find("isa"); p != t.end() && !p->is_null()) {
        ft.isa_parent = json_util::string(*p, kModule, ctx + ".isa");
      }
      types.push_back(std::move(ft));
    }
  }

  std::vector<ForceModel> models;
  if (auto it = doc.find("models"); it != doc.end()) {
    if (!it->is_array()) throw ParseError(kModule, "\"models\" must be an array");
    for (const auto& m : *it) {
      json_util::expect_keys(m, {"name", "type", "prior", "slots", "constraints"}, kModule, "model");
      ForceModel fm;
      fm.name = json_util::string(json_util::require(m, "name", kModule, "model"), kModule, "model.name");
      const std::string ctx = "model \"" + fm.name + "\"";
      fm.models_type = json_util::string(json_util::require(m, "type", kModule, ctx), kModule, ctx + ".type");
      fm.prior = json_util::number(json_util::require(m, "prior", kModule, ctx), kModule, ctx + ".prior");
      const json& slots = json_util::require(m, "slots", kModule, ctx);
      if (!slots.is_array()) throw ParseError(kModule, ctx + ": \"slots\" must be an array");
      for (const auto& s : slots) {
        json_util::expect_keys(s, {"type", "min", "max"}, kModule, ctx + " slot");
        ComponentSlot slot;
        slot.required_type = json_util::string(json_util::require(s, "type", kModule, ctx), kModule, ctx + " slot.type");
        slot.count_min = count_field(s, "min", 1, ctx);
        slot.count_max = count_field(s, "max", slot.count_min, ctx);
        fm.slots.push_back(std::move(slot));
      }
      if (auto c = m.find("constraints"); c != m.end()) {
        if (!c->is_array()) throw ParseError(kModule, ctx + ": \"constraints\" must be an array");
        for (const auto& cj : *c) {
          json_util::expect_keys(cj, {"slots", "distance_min", "distance_max", "bearing_tolerance"}, kModule,
                                 ctx + " constraint");
          DeploymentConstraint dc;
          const json& pair = json_util::require(cj, "slots", kModule, ctx);
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
              !pair[1].is_number_unsigned()) {
            throw ParseError(kModule, ctx + ": constraint \"slots\" must be two slot indices");
          }
          dc.slot_a = pair[0].get<std::size_t>();
          dc.slot_b = pair[1].get<std::size_t>();
          dc.distance_min = json_util::number(json_util::require(cj, "distance_min", kModule, ctx), kModule, ctx);
          dc.distance_max = json_util::number(json_util::require(cj, "distance_max", kModule, ctx), kModule, ctx);
          if (auto b = cj.find("bearing_tolerance"); b != cj.end() && !b->is_null()) {
            dc.bearing_tolerance = json_util::number(*b, kModule, ctx);
          }
          fm.constraints.push_back(dc);
        }
      }
      models.push_back(std::move(fm));
    }
  }

  DoctrineConfig doctrine;
  if (auto it = doc.find("doctrine"); it != doc.end()) {
    json_util::expect_keys(*it, {"min_separation", "orientation"}, kModule, "doctrine");
    if (auto s = it->find("min_separation"); s != it->end()) {
      for (const auto& r : *s) {
        json_util::expect_keys(r, {"types", "distance"}, kModule, "doctrine.min_separation");
        auto [a, b] = type_pair(r, "doctrine.min_separation");
        doctrine.min_separation.push_back(
            {a, b, json_util::number(json_util::require(r, "distance", kModule, "doctrine"), kModule, "doctrine")});
      }
    }
    if (auto o = it->find("orientation"); o != it->end()) {
      for (const auto& r : *o) {
        json_util::expect_keys(r, {"types", "max_heading_difference"}, kModule, "doctrine.orientation");
        auto [a, b] = type_pair(r, "doctrine.orientation");
        doctrine.orientation.push_back(
            {a, b,
             json_util::number(json_util::require(r, "max_heading_difference", kModule, "doctrine"), kModule,
                               "doctrine")});
      }
    }
  }

  return ModelLibrary(std::move(types), std::move(models), std::move(doctrine));
}

ModelLibrary load_library_file(const std::string& path) {
  return load_library(json_util::read_file(path, kModule));
}

}  // namespace forceinfer
