#include "core/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "core/accrual.hpp"
#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace forceinfer::oracle {

namespace {

const std::string kModule = "oracle";

using json_util::json;

char role_of(const std::string& name) { return name == "H" ? 'H' : name.empty() ? '?' : name[0]; }

std::uint32_t bit(std::size_t i) { return std::uint32_t{1} << i; }

struct Roles {
  std::size_t h = 0;
  std::vector<std::size_t> components;
  std::map<std::size_t, std::vector<std::size_t>> evidence;  // component -> e vars with that sole parent
  std::map<std::size_t, std::vector<std::size_t>> terrain;   // component -> t vars
  std::vector<std::size_t> shared;                           // e vars with several component parents
  std::vector<std::size_t> fit;
};

Roles roles_of(const OracleNetwork& n) {
  Roles r;
  bool has_h = false;
  for (std::size_t v = 0; v < n.variables.size(); ++v) {
    switch (role_of(n.variables[v])) {
      case 'H': r.h = v; has_h = true; break;
      case 'C': r.components.push_back(v); break;
      case 'f': r.fit.push_back(v); break;
      default: break;
    }
  }
  if (!has_h) throw ValidationError(kModule, "structural mismatch: network has no H");
  for (std::size_t v = 0; v < n.variables.size(); ++v) {
    const char role = role_of(n.variables[v]);
    if (role != 'e' && role != 't') continue;
    const auto& ps = n.parents[v];
    const bool all_components =
        std::all_of(ps.begin(), ps.end(), [&](std::size_t p) { return role_of(n.variables[p]) == 'C'; });
    if (ps.empty() || !all_components) {
      throw ValidationError(kModule, "structural mismatch: evidence \"" + n.variables[v] + "\" needs component parents");
    }
    if (ps.size() > 1) {
      if (role == 't') throw ValidationError(kModule, "structural mismatch: terrain with several parents");
      r.shared.push_back(v);
    } else if (role == 'e') {
      r.evidence[ps[0]].push_back(v);
    } else {
      r.terrain[ps[0]].push_back(v);
    }
  }
  return r;
}

Assignment observe(const OracleNetwork& n, const std::vector<std::size_t>& vars) {
  Assignment a;
  for (auto v : vars) a.emplace_back(n.variables[v], true);
  return a;
}

Assignment concat(Assignment a, const Assignment& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::size_t OracleNetwork::index(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] == name) return i;
  }
  throw ValidationError(kModule, "unknown variable \"" + std::string(name) + "\"");
}

void OracleNetwork::validate() const {
  if (variables.size() > kMaxVariables) throw ValidationError(kModule, "more than 20 variables");
  if (parents.size() != variables.size() || tables.size() != variables.size()) {
    throw ValidationError(kModule, "parents/tables do not match variables");
  }
  std::set<std::string> names(variables.begin(), variables.end());
  if (names.size() != variables.size()) throw ValidationError(kModule, "duplicate variable name");
  for (std::size_t v = 0; v < variables.size(); ++v) {
    for (auto p : parents[v]) {
      if (p >= variables.size() || p == v) throw ValidationError(kModule, "bad parent of \"" + variables[v] + "\"");
    }
    if (tables[v].size() != (std::size_t{1} << parents[v].size())) {
      throw ValidationError(kModule, "table of \"" + variables[v] + "\" has the wrong number of rows");
    }
    for (const auto& row : tables[v]) {
      if (row[0] < 0.0 || row[1] < 0.0 || std::fabs(row[0] + row[1] - 1.0) > 1e-12) {
        throw ValidationError(kModule, "table row of \"" + variables[v] + "\" does not sum to 1");
      }
    }
    if (role_of(variables[v]) == 'C') {
      for (std::size_t j = 0; j < parents[v].size(); ++j) {
        if (role_of(variables[parents[v][j]]) != 'H') continue;
        for (std::size_t row = 0; row < tables[v].size(); ++row) {
          if ((row & (std::size_t{1} << j)) && std::fabs(tables[v][row][1] - 1.0) > 1e-12) {
            throw ValidationError(kModule, "part-of link H -> " + variables[v] + " must have P(C|H) = 1");
          }
        }
      }
    }
  }
  // Acyclicity: repeatedly peel variables whose parents are all peeled.
  std::vector<bool> done(variables.size(), false);
  for (std::size_t round = 0; round < variables.size(); ++round) {
    for (std::size_t v = 0; v < variables.size(); ++v) {
      if (!done[v] && std::all_of(parents[v].begin(), parents[v].end(), [&](std::size_t p) { return done[p]; })) {
        done[v] = true;
      }
    }
  }
  if (std::find(done.begin(), done.end(), false) != done.end()) throw ValidationError(kModule, "network has a cycle");
}

Enumerator::Enumerator(const OracleNetwork& n) : network_(n) {
  n.validate();
  const std::size_t count = std::size_t{1} << n.variables.size();
  joint_.resize(count);
  for (std::size_t state = 0; state < count; ++state) {
    double p = 1.0;
    for (std::size_t v = 0; v < n.variables.size() && p != 0.0; ++v) {
      std::size_t row = 0;
      for (std::size_t j = 0; j < n.parents[v].size(); ++j) {
        if (state & bit(n.parents[v][j])) row |= std::size_t{1} << j;
      }
      p *= n.tables[v][row][(state & bit(v)) ? 1 : 0];
    }
    joint_[state] = p;
  }
}

std::pair<std::uint32_t, std::uint32_t> Enumerator::mask_of(const Assignment& event) const {
  std::uint32_t mask = 0;
  std::uint32_t value = 0;
  for (const auto& [name, v] : event) {
    const auto b = bit(network_.index(name));
    if ((mask & b) && (((value & b) != 0) != v)) return {b, ~std::uint32_t{0}};  // contradictory: empty event
    mask |= b;
    if (v) value |= b;
  }
  return {mask, value};
}

double Enumerator::probability(const Assignment& event) const {
  const auto [mask, value] = mask_of(event);
  double total = 0.0;
  for (std::size_t state = 0; state < joint_.size(); ++state) {
    if ((static_cast<std::uint32_t>(state) & mask) == value) total += joint_[state];
  }
  return total;
}

double Enumerator::conditional(const Assignment& query, const Assignment& given) const {
  const double denom = probability(given);
  if (denom <= 0.0) throw ValidationError(kModule, "zero-probability conditioning event");
  return probability(concat(query, given)) / denom;
}

double exact_conditional(const OracleNetwork& n, const Assignment& query, const Assignment& given) {
  return Enumerator(n).conditional(query, given);
}

DeviationReport check_accrual_formula(const OracleNetwork& n) {
  const Roles r = roles_of(n);
  if (r.components.empty()) throw ValidationError(kModule, "structural mismatch: no components");
  if (!r.shared.empty()) throw ValidationError(kModule, "structural mismatch: shared evidence in an accrual network");
  if (r.fit.size() > 1) throw ValidationError(kModule, "structural mismatch: more than one fit variable");
  const Enumerator en(n);
  const Assignment h{{"H", true}};

  AccrualInputs in;
  in.p_h = en.probability(h);
  std::vector<std::size_t> all_evidence;
  Assignment all_components;
  for (auto c : r.components) {
    const Assignment cq{{n.variables[c], true}};
    all_components.push_back(cq[0]);
    const auto e_vars = r.evidence.count(c) ? r.evidence.at(c) : std::vector<std::size_t>{};
    const auto t_vars = r.terrain.count(c) ? r.terrain.at(c) : std::vector<std::size_t>{};
    const Assignment e = observe(n, e_vars);
    const Assignment t = observe(n, t_vars);
    ComponentAccrualInputs ci;
    ci.p_c = en.probability(cq);
    ci.p_ce = en.conditional(cq, e);
    ci.p_ct = en.conditional(cq, t);
    ci.p_cet = en.conditional(cq, concat(e, t));
    in.per_component.push_back(ci);
    all_evidence.insert(all_evidence.end(), e_vars.begin(), e_vars.end());
    all_evidence.insert(all_evidence.end(), t_vars.begin(), t_vars.end());
  }
  const Assignment evidence = observe(n, all_evidence);
  Assignment target_given = concat(all_components, evidence);
  if (!r.fit.empty()) {
    const Assignment f = observe(n, r.fit);
    in.fit_num = en.conditional(f, concat(h, all_components));
    in.fit_den = en.conditional(f, evidence);
    target_given = concat(target_given, f);
  }
  const auto result = accrue_parent(in);

  DeviationReport rep;
  rep.approx = result.raw;
  rep.exact = en.conditional(h, target_given);
  rep.deviation = std::fabs(rep.approx - rep.exact);
  rep.out_of_range = result.out_of_range;
  return rep;
}

SkipIdentityResult check_skip_identity(const OracleNetwork& n) {
  const Roles r = roles_of(n);
  const Enumerator en(n);
  std::vector<std::size_t> evidence_vars;
  for (std::size_t v = 0; v < n.variables.size(); ++v) {
    const char role = role_of(n.variables[v]);
    if (role == 'e' || role == 't' || role == 'f') evidence_vars.push_back(v);
  }
  const Assignment e = observe(n, evidence_vars);
  const Assignment c = observe(n, r.components);
  const Assignment h{{"H", true}};

  SkipIdentityResult out;
  out.precondition = std::fabs(en.conditional(c, concat(h, e)) - 1.0) <= kIdentityTolerance;
  if (!out.precondition) return out;

  // Each probability is a fixed-order sum over the joint, so equal events give
  // identical sums.
  const double p_e = en.probability(e);
  const double p_he = en.probability(concat(h, e));
  const double p_ce = en.probability(concat(c, e));
  const double p_hce = en.probability(concat(h, concat(c, e)));
  out.p_h_given_e = p_he / p_e;
  out.p_c_given_e = p_ce / p_e;
  const double through = p_hce / p_ce;
  out.lhs = std::fabs(through - out.p_h_given_e);
  out.rhs = out.p_h_given_e * (1.0 - out.p_c_given_e) / out.p_c_given_e;
  out.holds = std::fabs(out.lhs - out.rhs) <= kIdentityTolerance;
  return out;
}

DeviationReport check_approx_k(const OracleNetwork& n, const std::vector<std::string>& ordering) {
  const Roles r = roles_of(n);
  const Enumerator en(n);
  std::vector<std::size_t> comps;
  for (const auto& name : ordering) {
    const auto v = n.index(name);
    if (role_of(name) != 'C') throw ValidationError(kModule, "ordering names a non-component \"" + name + "\"");
    comps.push_back(v);
  }
  std::vector<std::size_t> sorted = comps;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expected = r.components;
  std::sort(expected.begin(), expected.end());
  if (sorted != expected) throw ValidationError(kModule, "ordering is not a permutation of the components");

  // Evidence supporting each component: e and t variables with it as a parent.
  std::vector<std::set<std::size_t>> support(comps.size());
  std::set<std::size_t> pooled;
  for (std::size_t v = 0; v < n.variables.size(); ++v) {
    const char role = role_of(n.variables[v]);
    if (role != 'e' && role != 't') continue;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (std::find(n.parents[v].begin(), n.parents[v].end(), comps[i]) != n.parents[v].end()) {
        support[i].insert(v);
        pooled.insert(v);
      }
    }
  }

  DeviationReport rep;
  double k = 1.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    std::set<std::size_t> cond = pooled;
    for (std::size_t j = i + 1; j < comps.size(); ++j) {
      for (auto v : support[j]) cond.erase(v);
    }
    const Assignment cq{{n.variables[comps[i]], true}};
    k *= en.conditional(cq, observe(n, std::vector<std::size_t>(cond.begin(), cond.end())));
  }
  rep.approx = k;
  rep.exact = en.conditional(observe(n, comps), observe(n, std::vector<std::size_t>(pooled.begin(), pooled.end())));
  rep.deviation = std::fabs(rep.approx - rep.exact);

  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t j = 0; j < comps.size(); ++j) {
      if (i == j) continue;
      std::vector<std::size_t> only_j;
      for (auto v : support[j]) {
        if (!support[i].count(v)) only_j.push_back(v);
      }
      if (only_j.empty()) continue;
      const Assignment ci{{n.variables[comps[i]], true}};
      const double diff = std::fabs(en.conditional(ci, observe(n, only_j)) - en.probability(ci));
      rep.notes.push_back("P(" + n.variables[comps[i]] + "|e_" + n.variables[comps[j]] + ") = P(" +
                          n.variables[comps[i]] + ") " + (diff <= kIdentityTolerance ? "holds" : "fails"));
    }
  }
  return rep;
}

OracleNetwork random_network(Rng& rng, const NetworkShape& shape) {
  OracleNetwork n;
  auto add = [&](std::string name, std::vector<std::size_t> parents) {
    n.variables.push_back(std::move(name));
    n.tables.emplace_back(std::size_t{1} << parents.size());
    n.parents.push_back(std::move(parents));
    return n.variables.size() - 1;
  };
  auto set_row = [&](std::size_t v, std::size_t row, double p_true) { n.tables[v][row] = {1.0 - p_true, p_true}; };

  const auto h = add("H", {});
  set_row(h, 0, rng.uniform(0.2, 0.8));
  std::vector<std::size_t> comps;
  for (std::size_t i = 0; i < shape.components; ++i) {
    if (!shape.linked) {
      const auto c = add("C" + std::to_string(i + 1), {});
      set_row(c, 0, rng.uniform(0.2, 0.8));
      comps.push_back(c);
      continue;
    }
    const auto c = add("C" + std::to_string(i + 1), {h});
    set_row(c, 0, rng.uniform(0.05, 0.6));
    set_row(c, 1, 1.0);
    comps.push_back(c);
  }
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t j = 0; j < shape.evidence_per_component; ++j) {
      const auto e = add("e" + std::to_string(i + 1) + "_" + std::to_string(j + 1), {comps[i]});
      set_row(e, 0, rng.uniform(0.05, 0.45));
      set_row(e, 1, rng.uniform(0.55, 0.95));
    }
    if (shape.terrain) {
      const auto t = add("t" + std::to_string(i + 1), {comps[i]});
      set_row(t, 0, rng.uniform(0.2, 0.5));
      set_row(t, 1, rng.uniform(0.5, 0.9));
    }
  }
  for (std::size_t s = 0; s < shape.shared_evidence && comps.size() >= 2; ++s) {
    const std::size_t a = s % comps.size();
    const std::size_t b = (s + 1) % comps.size();
    const auto e = add("es" + std::to_string(s + 1), {comps[a], comps[b]});
    const double leak = rng.uniform(0.05, 0.3);
    const double wa = rng.uniform(0.4, 0.9);
    const double wb = rng.uniform(0.4, 0.9);
    for (std::size_t row = 0; row < 4; ++row) {
      const double miss = (1.0 - leak) * ((row & 1) ? 1.0 - wa : 1.0) * ((row & 2) ? 1.0 - wb : 1.0);
      set_row(e, row, 1.0 - miss);
    }
  }
  if (shape.fit) {
    std::vector<std::size_t> ps{h};
    ps.insert(ps.end(), comps.begin(), comps.end());
    const auto f = add("f", ps);
    for (std::size_t row = 0; row < n.tables[f].size(); ++row) set_row(f, row, rng.uniform(0.1, 0.9));
  }
  n.validate();
  return n;
}

OracleNetwork parse_network(std::string_view text) {
  const json doc = json_util::parse(text, kModule);
  json_util::expect_keys(doc, {"variables", "parents", "tables"}, kModule, "network");
  OracleNetwork n;
  for (const auto& v : json_util::require(doc, "variables", kModule, "network")) {
    n.variables.push_back(json_util::string(v, kModule, "variables"));
  }
  n.parents.resize(n.variables.size());
  n.tables.resize(n.variables.size());
  const json& parents = json_util::require(doc, "parents", kModule, "network");
  for (const auto& [name, list] : parents.items()) {
    const auto v = n.index(name);
    for (const auto& p : list) n.parents[v].push_back(n.index(json_util::string(p, kModule, "parents")));
  }
  const json& tables = json_util::require(doc, "tables", kModule, "network");
  for (const auto& [name, rows] : tables.items()) {
    const auto v = n.index(name);
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != 2) throw ParseError(kModule, "table rows are [P(false), P(true)] pairs");
      n.tables[v].push_back({json_util::number(row[0], kModule, "tables"), json_util::number(row[1], kModule, "tables")});
    }
  }
  n.validate();
  return n;
}

std::string serialize_network(const OracleNetwork& n) {
  json doc;
  doc["variables"] = n.variables;
  doc["parents"] = json::object();
  doc["tables"] = json::object();
  for (std::size_t v = 0; v < n.variables.size(); ++v) {
    if (!n.parents[v].empty()) {
      json ps = json::array();
      for (auto p : n.parents[v]) ps.push_back(n.variables[p]);
      doc["parents"][n.variables[v]] = ps;
    }
    json rows = json::array();
    for (const auto& row : n.tables[v]) rows.push_back({row[0], row[1]});
    doc["tables"][n.variables[v]] = rows;
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Fixture suites

namespace {

namespace fs = std::filesystem;

struct SuitePlan {
  std::size_t count;
  std::uint64_t seed;
};

SuitePlan plan_for(const std::string& suite) {
  if (suite == "accrual") return {12, 0xACC0};
  if (suite == "skip-identity") return {24, 0x5C1B};
  return {12, 0xA9B0};
}

NetworkShape shape_for(const std::string& suite, std::size_t i) {
  NetworkShape s;
  if (suite == "accrual") {
    s.components = 1 + i % 3;
    s.evidence_per_component = 1 + (i / 3) % 2;
    s.terrain = i % 2 == 0;
    s.fit = i % 4 != 3;
    if (s.components == 3 && s.evidence_per_component == 2) s.terrain = false;
  } else if (suite == "skip-identity") {
    s.components = 1 + i % 3;
    s.evidence_per_component = 1 + (i / 3) % 2;
    s.terrain = (i / 6) % 2 == 1 && s.components < 3;
    s.fit = i % 2 == 0;
    s.shared_evidence = s.components >= 2 ? (i / 2) % 2 : 0;
  } else {
    s.components = 2 + i % 2;
    s.evidence_per_component = 1 + (i / 2) % 2;
    s.shared_evidence = i % 3 == 2 ? 0 : 1;
    s.linked = i % 3 != 2;
  }
  return s;
}

std::vector<std::string> default_ordering(const OracleNetwork& n) {
  std::vector<std::string> out;
  for (const auto& v : n.variables) {
    if (role_of(v) == 'C') out.push_back(v);
  }
  return out;
}

// Named values recorded for one network in a suite; `identity_ok` is false when
// a check that must hold did not.
std::map<std::string, double> compute_entry(const std::string& suite, const OracleNetwork& n, bool& identity_ok,
                                            std::string& note) {
  identity_ok = true;
  if (suite == "accrual") {
    const auto rep = check_accrual_formula(n);
    return {{"raw", rep.approx}, {"exact", rep.exact}, {"deviation", rep.deviation}};
  }
  if (suite == "skip-identity") {
    const auto res = check_skip_identity(n);
    identity_ok = res.precondition && res.holds;
    if (!identity_ok) note = res.precondition ? "identity does not hold" : "precondition P(C|H,e)=1 violated";
    return {{"lhs", res.lhs}, {"rhs", res.rhs}, {"p_h_given_e", res.p_h_given_e}, {"p_c_given_e", res.p_c_given_e}};
  }
  const auto rep = check_approx_k(n, default_ordering(n));
  for (const auto& s : rep.notes) note += (note.empty() ? "" : "; ") + s;
  return {{"k", rep.approx}, {"exact", rep.exact}, {"deviation", rep.deviation}};
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"accrual", "skip-identity", "approx-k"};
  return names;
}

bool is_suite(std::string_view name) {
  const auto& names = suite_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool SuiteResult::ok() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.ok; });
}

void record_suite(const std::string& suite, const std::string& data_dir) {
  if (!is_suite(suite)) throw UsageError(kModule, "unknown suite \"" + suite + "\"");
  const fs::path dir = fs::path(data_dir) / suite;
  fs::create_directories(dir);
  const auto plan = plan_for(suite);
  Rng rng(plan.seed);
  json fixture;
  fixture["suite"] = suite;
  fixture["entries"] = json::array();
  for (std::size_t i = 0; i < plan.count; ++i) {
    const auto net = random_network(rng, shape_for(suite, i));
    char name[32];
    std::snprintf(name, sizeof name, "net_%02zu.json", i);
    json_util::write_file((dir / name).string(), serialize_network(net), kModule);
    // Values are computed from the re-parsed file so recording and checking
    // see the same numbers.
    const auto reloaded = parse_network(json_util::read_file((dir / name).string(), kModule));
    bool identity_ok = true;
    std::string note;
    json values = json::object();
    for (const auto& [key, v] : compute_entry(suite, reloaded, identity_ok, note)) values[key] = json_util::hex_double(v);
    json entry{{"network", suite + "/" + name}, {"values", values}};
    if (!note.empty()) entry["note"] = note;
    fixture["entries"].push_back(entry);
  }
  json_util::write_file((fs::path(data_dir) / (suite + ".fixture.json")).string(), fixture.dump(2) + "\n", kModule);
}

SuiteResult run_suite(const std::string& suite, const std::string& data_dir) {
  if (!is_suite(suite)) throw UsageError(kModule, "unknown suite \"" + suite + "\"");
  SuiteResult result;
  result.suite = suite;
  const json fixture =
      json_util::parse(json_util::read_file((fs::path(data_dir) / (suite + ".fixture.json")).string(), kModule), kModule);
  for (const auto& entry : json_util::require(fixture, "entries", kModule, "fixture")) {
    SuiteEntryResult er;
    er.network = json_util::string(json_util::require(entry, "network", kModule, "fixture"), kModule, "network");
    const auto net = parse_network(json_util::read_file((fs::path(data_dir) / er.network).string(), kModule));
    bool identity_ok = true;
    std::string note;
    const auto values = compute_entry(suite, net, identity_ok, note);
    er.ok = identity_ok;
    if (!identity_ok) er.detail = note;
    const json& recorded = json_util::require(entry, "values", kModule, "fixture");
    for (const auto& [key, v] : values) {
      const std::string now = json_util::hex_double(v);
      auto it = recorded.find(key);
      const std::string was = it == recorded.end() ? "<missing>" : it->get<std::string>();
      if (now != was) {
        er.ok = false;
        er.detail += (er.detail.empty() ? "" : "; ") + key + ": fixture " + was + " now " + now;
      }
    }
    result.entries.push_back(std::move(er));
  }
  return result;
}

}  // namespace forceinfer::oracle
