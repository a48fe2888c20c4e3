// One pass/fail line per acceptance criterion; exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "core/accrual.hpp"
#include "core/conflict.hpp"
#include "core/matcher.hpp"
#include "core/oracle.hpp"
#include "core/pipeline.hpp"
#include "core/rng.hpp"
#include "core/scenario.hpp"
#include "reference.hpp"

namespace fi = forceinfer;

namespace {

using Clock = std::chrono::steady_clock;

struct Options {
  std::string data_dir = FI_TEST_DATA "/oracle";
  std::string sample_dir = FI_SAMPLE_DATA;
  std::size_t c9_scenarios = 50;
  double c9_factor = 3.0;
  double c9_fraction = 0.9;
};

int failures = 0;

void verdict(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::string& path) {
  std::stringstream s;
  s << std::ifstream(path).rdbuf();
  return s.str();
}

fi::HypothesisId leaf(fi::HypothesisGraph& g, const std::string& item, double lambda, double prior,
                      std::vector<std::string> extra = {}) {
  fi::EvidenceItem e;
  e.id = fi::EvidenceId{item};
  e.kind = fi::EvidenceKind::detection;
  e.likelihood_ratio = lambda;
  g.add_evidence(e);
  fi::Hypothesis h;
  h.force_type = "tank";
  h.prior = prior;
  h.own_evidence.insert(e.id);
  for (const auto& x : extra) h.own_evidence.insert(fi::EvidenceId{x});
  return g.insert(h);
}

void detection(fi::HypothesisGraph& g, const std::string& item, double lambda) {
  fi::EvidenceItem e;
  e.id = fi::EvidenceId{item};
  e.kind = fi::EvidenceKind::detection;
  e.likelihood_ratio = lambda;
  g.add_evidence(e);
}

fi::ConflictSet conflict_of(const fi::HypothesisGraph& g, std::vector<fi::HypothesisId> members, bool all_pairs) {
  fi::ConflictSet s;
  std::sort(members.begin(), members.end());
  s.members = members;
  for (std::size_t i = 0; i < members.size(); ++i) {
    s.pooled_evidence = fi::set_union(s.pooled_evidence, g.evidence_closure(members[i]));
    for (std::size_t j = i + 1; all_pairs && j < members.size(); ++j) {
      s.pairs.push_back({members[i], members[j], {fi::ConflictReason::shared_evidence}, 1});
    }
  }
  return s;
}

// Skip identity on seeded oracle networks.
void criterion1() {
  const auto t0 = Clock::now();
  fi::Rng rng(0xC1);
  std::size_t held = 0, tested = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    fi::oracle::NetworkShape shape;
    shape.components = 1 + rng.below(3);
    shape.evidence_per_component = 1 + rng.below(2);
    shape.terrain = shape.components <= 2 && rng.bernoulli(0.5);
    const auto net = fi::oracle::random_network(rng, shape);
    if (net.variables.size() > 12) continue;
    const auto r = fi::oracle::check_skip_identity(net);
    if (!r.precondition) continue;
    ++tested;
    worst = std::max(worst, std::abs(r.lhs - r.rhs));
    if (r.holds) ++held;
  }
  const double secs = seconds_since(t0);
  verdict(1, tested == 100 && held == tested && secs < 5.0,
          fmt("skip identity held on %zu/%zu networks, max |lhs-rhs| %.3g (tol 1e-12), %.2f s (limit 5 s)", held,
              tested, worst, secs));
}

// Two-hypothesis factorizations and order invariance with disjoint evidence.
void criterion2() {
  fi::Rng rng(0xC2);
  std::size_t exact_pairs = 0;
  const std::size_t pair_trials = 200;
  for (std::size_t t = 0; t < pair_trials; ++t) {
    fi::HypothesisGraph g;
    detection(g, "e12", rng.uniform(0.2, 20));
    const auto c1 = leaf(g, "e1", rng.uniform(0.2, 20), rng.uniform(0.1, 0.9), {"e12"});
    const auto c2 = leaf(g, "e2", rng.uniform(0.2, 20), rng.uniform(0.1, 0.9), {"e12"});
    const auto s = conflict_of(g, {c1, c2}, true);
    const fi::EvidenceSet e1{fi::EvidenceId{"e1"}}, e2{fi::EvidenceId{"e2"}}, e12{fi::EvidenceId{"e12"}};
    const auto a = fi::approx_joint(s, {c1, c2}, g);
    const auto b = fi::approx_joint(s, {c2, c1}, g);
    const bool first = a.factors[0] == fi::posterior_given_subset(g, c1, e1) &&
                       a.factors[1] == fi::posterior_given_subset(g, c2, fi::set_union(e2, e12));
    const bool second = b.factors[0] == fi::posterior_given_subset(g, c2, e2) &&
                        b.factors[1] == fi::posterior_given_subset(g, c1, fi::set_union(e1, e12));
    if (first && second) ++exact_pairs;
  }

  std::size_t invariant = 0, sets = 0, perms = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int t = 0; t < 20; ++t) {
      fi::HypothesisGraph g;
      std::vector<fi::HypothesisId> ids;
      for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(leaf(g, "e" + std::to_string(i), rng.uniform(0.1, 30), rng.uniform(0.05, 0.95)));
      }
      const auto s = conflict_of(g, ids, false);
      auto order = ids;
      const double k0 = fi::approx_joint(s, order, g).k;
      bool same = true;
      do {
        ++perms;
        same = same && fi::approx_joint(s, order, g).k == k0;
      } while (std::next_permutation(order.begin(), order.end()));
      ++sets;
      if (same) ++invariant;
    }
  }
  verdict(2, exact_pairs == pair_trials && invariant == sets,
          fmt("both n=2 factorizations reproduced exactly in %zu/%zu cases; identical k over all %zu permutations "
              "in %zu/%zu disjoint sets (n<=5)",
              exact_pairs, pair_trials, perms, invariant, sets));
}

// Accrual audit: fixture bit-stability, all-equal inputs, out-of-range case.
void criterion3(const Options& o) {
  bool fixtures_ok = false;
  std::size_t entries = 0;
  std::string drift;
  try {
    const auto r = fi::oracle::run_suite("accrual", o.data_dir);
    fixtures_ok = r.ok() && !r.entries.empty();
    entries = r.entries.size();
    for (const auto& e : r.entries) {
      if (!e.ok && drift.empty()) drift = " first drift " + e.network + ": " + e.detail;
    }
  } catch (const std::exception& e) {
    drift = std::string(" error: ") + e.what();
  }

  fi::Rng rng(0xC3);
  std::size_t exact_one = 0;
  const std::size_t equal_trials = 10000;
  for (std::size_t t = 0; t < equal_trials; ++t) {
    const double x = rng.uniform(1e-6, 1.0);
    fi::AccrualInputs in;
    in.fit_num = in.fit_den = in.p_h = x;
    in.per_component = {{x, x, x, x}};
    if (fi::accrue_parent(in).raw == 1.0) ++exact_one;
  }

  fi::AccrualInputs doc;
  doc.fit_num = 0.8;
  doc.fit_den = 0.5;
  doc.per_component = {{0.9, 0.6, 0.95, 0.5}};
  doc.p_h = 0.3;
  const auto r = fi::accrue_parent(doc);
  const bool doc_ok = std::abs(r.raw - 1.091) <= 1e-3 && r.out_of_range && r.posterior == 1.0;

  verdict(3, fixtures_ok && exact_one == equal_trials && doc_ok,
          fmt("accrual fixtures bit-stable on %zu networks: %s; all-equal inputs raw == 1 exactly in %zu/%zu; "
              "documented case raw %.6f (1.091 +- 1e-3), out_of_range %s%s",
              entries, fixtures_ok ? "yes" : "no", exact_one, equal_trials, r.raw, r.out_of_range ? "true" : "false",
              drift.c_str()));
}

// Conflict measure contract and the decision boundary.
void criterion4() {
  bool zero_at_one = fi::conflict_measure(1.0) == 0.0;
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100000; ++i) {
    const double m = fi::conflict_measure(i / 100000.0);
    decreasing = decreasing && m < prev;
    prev = m;
  }
  // Random pairs at least 1e-9 apart must be strictly ordered; adjacent
  // doubles may round to the same measure but must never increase.
  bool monotone_ulp = true;
  fi::Rng rng(0xC4);
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(1e-9, 1.0);
    const double b = std::min(1.0, a + rng.uniform(1e-9, 1e-3));
    decreasing = decreasing && fi::conflict_measure(b) < fi::conflict_measure(a);
    const double next = std::nextafter(a, 2.0);
    monotone_ulp = monotone_ulp && fi::conflict_measure(next) <= fi::conflict_measure(a);
  }

  std::size_t boundary_ok = 0;
  const std::size_t trials = 100;
  for (std::size_t t = 0; t < trials; ++t) {
    const double la = rng.uniform(1, 30), lb = rng.uniform(1, 30), ls = rng.uniform(1, 30);
    const double pa = rng.uniform(0.1, 0.9), pb = rng.uniform(0.1, 0.9);
    auto build = [&](fi::HypothesisGraph& g) {
      detection(g, "s", ls);
      const auto a = leaf(g, "a", la, pa, {"s"});
      const auto b = leaf(g, "b", lb, pb, {"s"});
      fi::propagate_level(g, fi::Level::vehicle);
      return conflict_of(g, {a, b}, true);
    };
    fi::HypothesisGraph probe;
    const auto s0 = build(probe);
    const auto order = fi::order_hypotheses(s0, probe, fi::OrderingHeuristic::most_matches);
    const double measure = fi::conflict_measure(fi::approx_joint(s0, order, probe).k);
    fi::DecideConfig at, above, below;
    at.tau = measure;
    above.tau = std::nextafter(measure, 1e300);
    below.tau = std::nextafter(measure, 0.0);
    fi::HypothesisGraph g1, g2, g3;
    const auto s1 = build(g1);
    const auto s2 = build(g2);
    const auto s3 = build(g3);
    if (measure > 0.0 && fi::decide(s1, g1, at).decision == fi::Decision::resolve &&
        fi::decide(s2, g2, above).decision == fi::Decision::skip &&
        fi::decide(s3, g3, below).decision == fi::Decision::resolve) {
      ++boundary_ok;
    }
  }
  verdict(4, zero_at_one && decreasing && monotone_ulp && boundary_ok == trials,
          fmt("measure(1) = 0: %s; strictly decreasing on (0,1] (1e-5 grid, 1e5 pairs >= 1e-9 apart): %s; "
              "non-increasing between adjacent doubles: %s; skip iff measure < tau (measure == tau resolves) "
              "in %zu/%zu boundary cases",
              zero_at_one ? "yes" : "no", decreasing ? "yes" : "no", monotone_ulp ? "yes" : "no", boundary_ok, trials));
}

// Maximal consistent sets against brute force; beliefs sum to one.
void criterion5() {
  std::size_t graphs = 0, equal = 0, normalized = 0;
  double worst_sum = 0.0;
  fi::Rng rng(0xC5);
  auto check = [&](std::size_t n, std::uint64_t edge_bits) {
    fi::HypothesisGraph g;
    std::vector<fi::HypothesisId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(leaf(g, "e" + std::to_string(i), 1.0, rng.uniform(0.0, 1.0)));
    fi::ConflictSet s = conflict_of(g, ids, false);
    std::size_t bit = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++bit) {
        if (edge_bits >> bit & 1) s.pairs.push_back({ids[i], ids[j], {fi::ConflictReason::too_close}, 0});
      }
    }
    ++graphs;
    if (fi::maximal_consistent_sets(s) == forceinfer::reference::brute_force_mis(s)) ++equal;
    double total = 0.0;
    for (const auto& cs : fi::resolve_exact(s, g)) total += cs.normalized_belief;
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    if (std::abs(total - 1.0) <= 1e-12) ++normalized;
  };
  // Every labelled graph up to five members; seeded samples above.
  for (std::size_t n = 1; n <= 5; ++n) {
    const std::size_t edges = n * (n - 1) / 2;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << edges); ++bits) check(n, bits);
  }
  for (std::size_t n = 6; n <= 8; ++n) {
    const std::size_t edges = n * (n - 1) / 2;
    for (int t = 0; t < 3000; ++t) {
      const double density = rng.uniform(0.0, 1.0);
      std::uint64_t bits = 0;
      for (std::size_t b = 0; b < edges; ++b) {
        if (rng.bernoulli(density)) bits |= std::uint64_t{1} << b;
      }
      check(n, bits);
    }
  }
  verdict(5, equal == graphs && normalized == graphs,
          fmt("maximal consistent sets equal brute force on %zu/%zu graphs (all graphs n<=5, 3000 seeded per n=6..8); "
              "beliefs sum to 1 within 1e-12 on %zu (worst %.2g)",
              equal, graphs, normalized, worst_sum));
}

// Matcher against exhaustive subset enumeration.
void criterion6() {
  const auto lib = forceinfer::reference::mixed_library();
  fi::Rng rng(0xC6);
  std::size_t equal = 0, candidates = 0;
  const std::size_t scenes = 200;
  for (std::size_t t = 0; t < scenes; ++t) {
    fi::MatchConfig cfg;
    cfg.gather_radius = rng.uniform(150, 400);
    cfg.min_fit = rng.uniform(0.0, 0.6);
    cfg.max_missing = static_cast<int>(rng.below(2));
    fi::HypothesisGraph g;
    forceinfer::reference::random_vehicles(g, rng, 10);
    const auto r = fi::match_level(g, lib, fi::Level::array, cfg);
    candidates += r.candidates.size();
    if (forceinfer::reference::keys_of(r) ==
        forceinfer::reference::brute_force_match(g, lib, fi::Level::array, cfg)) {
      ++equal;
    }
  }
  verdict(6, equal == scenes,
          fmt("match_level equals exhaustive enumeration on %zu/%zu scenes (<=10 leaves, %zu candidates)", equal,
              scenes, candidates));
}

// Noiseless battalion end to end.
void criterion7(const Options& o) {
  const auto t0 = Clock::now();
  try {
    auto cfg = fi::load_run_config(o.sample_dir + "/config.json");
    const auto lib = fi::load_library_file(cfg.resolve(cfg.library));
    const auto truth_text = slurp(o.sample_dir + "/battalion_truth.json");
    auto gt = fi::parse_ground_truth(truth_text);
    const auto problems = fi::validate_ground_truth(gt, lib);
    const auto noise = fi::parse_noise(slurp(o.sample_dir + "/noise_noiseless.json"));
    const auto scenario = fi::parse_scenario(fi::generate(gt, noise));
    const auto inf = fi::run_inference(lib, scenario, cfg);
    const auto report = fi::json_util::json::parse(fi::report_json(inf, scenario, cfg));
    const auto metrics = fi::score(report, fi::json_util::json::parse(truth_text), lib);
    bool perfect = problems.empty();
    std::string detail;
    for (const auto& m : metrics) {
      if (m.level == fi::Level::array || m.level == fi::Level::battalion) {
        perfect = perfect && m.precision == 1.0 && m.recall == 1.0;
        detail += fmt("%s P=%.3f R=%.3f; ", std::string(fi::to_string(m.level)).c_str(), m.precision, m.recall);
      }
    }
    bool above_prior = false;
    double post = 0.0, prior = 0.0;
    for (const auto& id : inf.graph.at_level(fi::Level::battalion)) {
      const auto& h = inf.graph.at(id);
      post = h.posterior.value_or(0.0);
      prior = h.prior;
      above_prior = post > prior;
    }
    const double secs = seconds_since(t0);
    verdict(7, perfect && above_prior && secs < 10.0,
            fmt("%sbattalion posterior %.4f vs prior %.4f, %.2f s (limit 10 s)", detail.c_str(), post, prior, secs));
  } catch (const std::exception& e) {
    verdict(7, false, std::string("error: ") + e.what());
  }
}

// Byte-identical reports and scenarios.
void criterion8(const Options& o) {
  try {
    const auto dir = std::filesystem::temp_directory_path() / "forceinfer_acceptance";
    std::filesystem::create_directories(dir);
    fi::RunOverrides a, b;
    a.output = (dir / "a.json").string();
    b.output = (dir / "b.json").string();
    const auto ra = fi::infer_from_config(o.sample_dir + "/config.json", a);
    const auto rb = fi::infer_from_config(o.sample_dir + "/config.json", b);
    const bool reports = ra == rb && slurp(*a.output) == slurp(*b.output);

    auto gt = fi::parse_ground_truth(slurp(o.sample_dir + "/battalion_truth.json"));
    const auto noise = fi::parse_noise(slurp(o.sample_dir + "/noise_field.json"));
    const auto s1 = fi::generate(gt, noise);
    const auto s2 = fi::generate(gt, noise);
    std::filesystem::remove_all(dir);
    verdict(8, reports && s1 == s2,
            fmt("infer reports identical: %s (%zu bytes); generated scenarios identical: %s (%zu bytes)",
                reports ? "yes" : "no", ra.size(), s1 == s2 ? "yes" : "no", s1.size()));
  } catch (const std::exception& e) {
    verdict(8, false, std::string("error: ") + e.what());
  }
}

// Skip error estimate against the realized error on low-conflict scenarios:
// two leaves sharing one detection under a common parent.
void criterion9(const Options& o) {
  fi::Rng rng(0xC9);
  std::size_t scenarios = 0, within = 0, draws = 0;
  double worst_ratio = 0.0;
  while (scenarios < o.c9_scenarios && draws < 100000) {
    ++draws;
    fi::HypothesisGraph g;
    const double pa = rng.uniform(0.3, 0.7), pb = rng.uniform(0.3, 0.7);
    detection(g, "s", rng.uniform(2, 20));
    const auto a = leaf(g, "a", rng.uniform(5, 60), pa, {"s"});
    const auto b = leaf(g, "b", rng.uniform(5, 60), pb, {"s"});
    fi::Hypothesis parent;
    parent.force_type = "tank-company";
    parent.level = fi::Level::array;
    parent.model = "tank-company-line";
    parent.components = {a, b};
    parent.prior = rng.uniform(0.05, std::min(pa, pb));
    const auto h = g.insert(parent);
    fi::propagate_level(g, fi::Level::vehicle);
    fi::propagate_level(g, fi::Level::array);
    const auto s = conflict_of(g, {a, b}, true);
    fi::DecideConfig cfg;
    const auto r = fi::decide(s, g, cfg);
    if (!(r.measure < 0.1) || r.decision != fi::Decision::skip) continue;
    if (!r.realized_skip_errors.contains(h)) continue;
    ++scenarios;
    const double est = r.skip_error_estimates.at(h);
    const double real = r.realized_skip_errors.at(h);
    if (real <= o.c9_factor * est) ++within;
    if (std::getenv("FI_C9_TRACE")) {
      std::fprintf(stderr, "k %.5f exact %.5f skip %.5f est %.5f real %.5f f0 %.4f f1 %.4f\n", r.k, *r.exact_joint,
                   fi::skip_posterior(g, h), est, real, r.factors[0], r.factors[1]);
    }
    if (est > 0.0) worst_ratio = std::max(worst_ratio, real / est);
  }
  const double fraction = scenarios ? static_cast<double>(within) / static_cast<double>(scenarios) : 0.0;
  verdict(9, scenarios == o.c9_scenarios && fraction >= o.c9_fraction,
          fmt("realized <= %.1fx estimate in %zu/%zu low-conflict scenarios (%.0f%%, need %.0f%%); worst "
              "realized/estimate %.3f; %zu draws",
              o.c9_factor, within, scenarios, 100.0 * fraction, 100.0 * o.c9_fraction, worst_ratio, draws));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"forceinfer acceptance checks"};
  app.add_option("--data-dir", o.data_dir, "oracle fixture directory");
  app.add_option("--sample-dir", o.sample_dir, "sample data directory");
  app.add_option("--c9-scenarios", o.c9_scenarios, "low-conflict scenarios for criterion 9");
  app.add_option("--c9-factor", o.c9_factor, "allowed realized/estimate factor for criterion 9");
  app.add_option("--c9-fraction", o.c9_fraction, "required fraction for criterion 9");
  CLI11_PARSE(app, argc, argv);

  criterion1();
  criterion2();
  criterion3(o);
  criterion4();
  criterion5();
  criterion6();
  criterion7(o);
  criterion8(o);
  criterion9(o);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
