#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core/rng.hpp"

namespace forceinfer::oracle {

// Small explicit Bayesian network over binary variables. Variable roles come
// from the name: "H" is the parent hypothesis, "C*" components, "e*" component
// evidence, "t*" terrain evidence, "f*" fit evidence.
struct OracleNetwork {
  std::vector<std::string> variables;
  std::vector<std::vector<std::size_t>> parents;
  // Per variable, one row per parent configuration: {P(false), P(true)}.
  // Bit j of the row index is the value of parents[j].
  std::vector<std::vector<std::array<double, 2>>> tables;

  std::size_t index(std::string_view name) const;
  // Throws ValidationError: > 20 variables, rows not summing to 1 within 1e-12,
  // a component without a deterministic P(C | H) = 1 link, bad parents.
  void validate() const;
};

inline constexpr std::size_t kMaxVariables = 20;

using Assignment = std::vector<std::pair<std::string, bool>>;

// Full joint table by enumeration; summation order is fixed (ascending state),
// so every result is reproducible bit for bit.
class Enumerator {
 public:
  explicit Enumerator(const OracleNetwork& n);

  double probability(const Assignment& event) const;
  // Throws ValidationError when P(given) == 0.
  double conditional(const Assignment& query, const Assignment& given) const;

 private:
  std::pair<std::uint32_t, std::uint32_t> mask_of(const Assignment& event) const;

  const OracleNetwork& network_;
  std::vector<double> joint_;
};

double exact_conditional(const OracleNetwork& n, const Assignment& query, const Assignment& given);

struct DeviationReport {
  double approx = 0.0;
  double exact = 0.0;
  double deviation = 0.0;
  bool out_of_range = false;
  std::vector<std::string> notes;
};

// Computes every input of the accrual rule exactly from the network, runs the
// rule, and compares its raw value with exact P(H | ∧C, ∧e, ∧t, f).
DeviationReport check_accrual_formula(const OracleNetwork& n);

struct SkipIdentityResult {
  bool precondition = false;  // P(∧C | H, e) == 1
  bool holds = false;
  double lhs = 0.0;  // |P(H | ∧C, e) - P(H | e)|
  double rhs = 0.0;  // P(H | e) (1 - P(∧C | e)) / P(∧C | e)
  double p_h_given_e = 0.0;
  double p_c_given_e = 0.0;
};

inline constexpr double kIdentityTolerance = 1e-12;

SkipIdentityResult check_skip_identity(const OracleNetwork& n);

// Ordered-product approximation of P(∧C | e) with exact factors, against the
// exact joint. `ordering` lists component variable names.
DeviationReport check_approx_k(const OracleNetwork& n, const std::vector<std::string>& ordering);

struct NetworkShape {
  std::size_t components = 2;
  std::size_t evidence_per_component = 1;
  bool terrain = false;
  bool fit = false;
  std::size_t shared_evidence = 0;
  // false leaves the components as independent roots (no part-of link to H).
  bool linked = true;
};

// Random network honouring the role structure. Parameters are drawn so that
// conditioning events keep non-negligible probability.
OracleNetwork random_network(Rng& rng, const NetworkShape& shape);

OracleNetwork parse_network(std::string_view json_text);
std::string serialize_network(const OracleNetwork& n);

// Fixture suites: "accrual", "skip-identity", "approx-k".
const std::vector<std::string>& suite_names();
bool is_suite(std::string_view name);

struct SuiteEntryResult {
  std::string network;
  bool ok = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<SuiteEntryResult> entries;
  bool ok() const;
};

// Recomputes every fixture entry under `data_dir` and compares bit for bit.
SuiteResult run_suite(const std::string& suite, const std::string& data_dir);
// Regenerates the suite's networks from fixed seeds and records fixtures.
void record_suite(const std::string& suite, const std::string& data_dir);

}  // namespace forceinfer::oracle
