#include "forceinfer/forceinfer.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "core/conflict.hpp"
#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "core/model_space.hpp"
#include "core/oracle.hpp"
#include "core/pipeline.hpp"
#include "core/scenario.hpp"

struct fi_library {
  forceinfer::ModelLibrary lib;
};

namespace {

thread_local std::string last_error;

fi_status fail(fi_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
fi_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const forceinfer::ParseError& e) {
    return fail(FI_ERR_PARSE, e.what());
  } catch (const forceinfer::ValidationError& e) {
    return fail(FI_ERR_VALIDATION, e.what());
  } catch (const forceinfer::IoError& e) {
    return fail(FI_ERR_IO, e.what());
  } catch (const forceinfer::UsageError& e) {
    return fail(FI_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(FI_ERR_INTERNAL, std::string("internal: ") + e.what());
  } catch (...) {
    return fail(FI_ERR_INTERNAL, "internal: unknown exception");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* fi_last_error(void) { return last_error.c_str(); }

const char* fi_status_name(fi_status status) {
  switch (status) {
    case FI_OK: return "ok";
    case FI_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FI_ERR_PARSE: return "parse error";
    case FI_ERR_VALIDATION: return "validation error";
    case FI_ERR_IO: return "i/o error";
    case FI_ERR_USAGE: return "usage error";
    case FI_ERR_MISMATCH: return "mismatch";
    case FI_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fi_version(void) { return "1.0.0"; }

void fi_string_free(char* s) { std::free(s); }

fi_status fi_library_load_file(const char* path, fi_library** out) {
  if (!path || !out) return fail(FI_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new fi_library{forceinfer::load_library_file(path)};
    return FI_OK;
  });
}

fi_status fi_library_load_string(const char* json_text, fi_library** out) {
  if (!json_text || !out) return fail(FI_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new fi_library{forceinfer::load_library(json_text)};
    return FI_OK;
  });
}

void fi_library_free(fi_library* lib) { delete lib; }

fi_status fi_library_counts(const fi_library* lib, size_t* type_count, size_t* model_count) {
  if (!lib || !type_count || !model_count) return fail(FI_ERR_INVALID_ARGUMENT, "null argument");
  *type_count = lib->lib.types().size();
  *model_count = lib->lib.models().size();
  return FI_OK;
}

fi_status fi_library_subsumes(const fi_library* lib, const char* general, const char* specific, int* out) {
  if (!lib || !general || !specific || !out) return fail(FI_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = lib->lib.subsumes(general, specific) ? 1 : 0;
    return FI_OK;
  });
}

fi_status fi_infer(const fi_infer_options* options, char** report_out) {
  if (!options || !options->config_path) return fail(FI_ERR_INVALID_ARGUMENT, "config path is required");
  if (report_out) *report_out = nullptr;
  return guarded([&] {
    forceinfer::RunOverrides ov;
    if (options->has_seed) ov.seed = options->seed;
    if (options->has_tau) ov.tau = options->tau;
    if (options->heuristic) {
      const auto h = forceinfer::heuristic_from_string(options->heuristic);
      if (!h) throw forceinfer::UsageError("cli", std::string("unknown heuristic \"") + options->heuristic + "\"");
      ov.heuristic = *h;
    }
    if (options->out_path) ov.output = options->out_path;
    const std::string report = forceinfer::infer_from_config(options->config_path, ov);
    if (report_out) *report_out = duplicate(report);
    return FI_OK;
  });
}

fi_status fi_simulate(const char* ground_truth_path, const char* noise_path, int has_seed, uint64_t seed,
                      const char* out_path, char** scenario_out) {
  if (!ground_truth_path || !noise_path) return fail(FI_ERR_INVALID_ARGUMENT, "ground truth and noise paths are required");
  if (scenario_out) *scenario_out = nullptr;
  return guarded([&] {
    const auto gt = forceinfer::parse_ground_truth(forceinfer::json_util::read_file(ground_truth_path, "scenario"));
    auto noise = forceinfer::parse_noise(forceinfer::json_util::read_file(noise_path, "scenario"));
    if (has_seed) noise.seed = seed;
    const std::string text = forceinfer::generate(gt, noise);
    if (out_path) forceinfer::json_util::write_file(out_path, text, "scenario");
    if (scenario_out) *scenario_out = duplicate(text);
    return FI_OK;
  });
}

fi_status fi_oracle_run(const char* suite, const char* data_dir, int record, char** report_out) {
  if (!suite || !data_dir) return fail(FI_ERR_INVALID_ARGUMENT, "suite and data directory are required");
  if (report_out) *report_out = nullptr;
  return guarded([&] {
    if (record) forceinfer::oracle::record_suite(suite, data_dir);
    const auto result = forceinfer::oracle::run_suite(suite, data_dir);
    std::string text;
    for (const auto& e : result.entries) {
      text += (e.ok ? "ok    " : "DRIFT ") + e.network;
      if (!e.detail.empty()) text += "  " + e.detail;
      text += "\n";
    }
    text += std::string(suite) + ": " + std::to_string(result.entries.size()) + " networks, " +
            (result.ok() ? "all match" : "mismatch") + "\n";
    if (report_out) *report_out = duplicate(text);
    if (!result.ok()) return fail(FI_ERR_MISMATCH, std::string(suite) + ": fixture mismatch");
    return FI_OK;
  });
}

fi_status fi_conflict_measure(double k, double* out) {
  if (!out) return fail(FI_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = forceinfer::conflict_measure(k);
    return FI_OK;
  });
}

}  // extern "C"
