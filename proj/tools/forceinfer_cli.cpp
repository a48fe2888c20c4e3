#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "forceinfer/forceinfer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

int exit_code(fi_status s) {
  switch (s) {
    case FI_OK: return kExitOk;
    case FI_ERR_IO:
    case FI_ERR_USAGE:
    case FI_ERR_INVALID_ARGUMENT: return kExitUsage;
    default: return kExitDomain;
  }
}

int report_failure(fi_status s) {
  std::fprintf(stderr, "error: %s\n", fi_last_error());
  return exit_code(s);
}

void print_and_free(char* text, std::FILE* stream) {
  if (!text) return;
  std::fputs(text, stream);
  fi_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical evidence-accrual engine for force-structure hypotheses"};
  app.require_subcommand(1);

  std::string library_path;
  auto* validate = app.add_subcommand("validate", "Load and check a model library");
  validate->add_option("library", library_path, "Library JSON");
  validate->add_option("--config", library_path, "Library JSON (alternative to the positional form)");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::string> heuristic;
  std::optional<std::string> out_path;
  auto* infer = app.add_subcommand("infer", "Run the inference pipeline and write a report");
  infer->add_option("--config", config_path, "Run config JSON")->required();
  infer->add_option("--seed", seed, "Seed recorded in the report");
  infer->add_option("--tau", tau, "Conflict threshold (> 0)");
  infer->add_option("--heuristic", heuristic, "most_matches | highest_prior | highest_posterior");
  infer->add_option("--out", out_path, "Report path; '-' writes to stdout only");

  std::string truth_path;
  std::string noise_path;
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario from ground truth and a noise model");
  simulate->add_option("--config", truth_path, "Ground-truth JSON")->required();
  simulate->add_option("--noise", noise_path, "Noise JSON")->required();
  simulate->add_option("--seed", seed, "Overrides the noise seed");
  simulate->add_option("--out", out_path, "Scenario path (stdout when absent)");

  std::string suite;
  std::string data_dir = "tests/data/oracle";
  bool record = false;
  auto* oracle = app.add_subcommand("oracle", "Check formulas against exact enumeration fixtures");
  oracle->add_option("suite", suite, "accrual | skip-identity | approx-k")->required();
  oracle->add_option("--data-dir", data_dir, "Fixture directory");
  oracle->add_flag("--record", record, "Regenerate fixtures before checking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*validate) {
    if (library_path.empty()) {
      std::fprintf(stderr, "error: validate needs a library path\n");
      return kExitUsage;
    }
    fi_library* lib = nullptr;
    const fi_status s = fi_library_load_file(library_path.c_str(), &lib);
    if (s != FI_OK) return report_failure(s);
    std::size_t types = 0;
    std::size_t models = 0;
    fi_library_counts(lib, &types, &models);
    std::printf("ok: %zu types, %zu models\n", types, models);
    fi_library_free(lib);
    return kExitOk;
  }

  if (*infer) {
    fi_infer_options opts{};
    opts.config_path = config_path.c_str();
    opts.has_seed = seed.has_value();
    opts.seed = seed.value_or(0);
    opts.has_tau = tau.has_value();
    opts.tau = tau.value_or(0.0);
    opts.heuristic = heuristic ? heuristic->c_str() : nullptr;
    const bool to_stdout = out_path && *out_path == "-";
    opts.out_path = out_path && !to_stdout ? out_path->c_str() : nullptr;
    char* report = nullptr;
    const fi_status s = fi_infer(&opts, to_stdout ? &report : nullptr);
    if (s != FI_OK) return report_failure(s);
    print_and_free(report, stdout);
    return kExitOk;
  }

  if (*simulate) {
    char* text = nullptr;
    const fi_status s = fi_simulate(truth_path.c_str(), noise_path.c_str(), seed.has_value(), seed.value_or(0),
                                    out_path ? out_path->c_str() : nullptr, out_path ? nullptr : &text);
    if (s != FI_OK) return report_failure(s);
    print_and_free(text, stdout);
    return kExitOk;
  }

  char* text = nullptr;
  const fi_status s = fi_oracle_run(suite.c_str(), data_dir.c_str(), record ? 1 : 0, &text);
  print_and_free(text, stdout);
  if (s != FI_OK) return report_failure(s);
  return kExitOk;
}
