#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "forceinfer/forceinfer.h"

namespace {

const std::string kSample = FI_SAMPLE_DATA;

std::string take(char* s) {
  std::string out = s ? s : "";
  fi_string_free(s);
  return out;
}

TEST(CApi, LibraryLifecycle) {
  fi_library* lib = nullptr;
  ASSERT_EQ(fi_library_load_file((kSample + "/library.json").c_str(), &lib), FI_OK);
  size_t types = 0, models = 0;
  ASSERT_EQ(fi_library_counts(lib, &types, &models), FI_OK);
  EXPECT_GT(types, 0u);
  EXPECT_EQ(models, 3u);
  int yes = -1;
  ASSERT_EQ(fi_library_subsumes(lib, "tank", "T-72-tank", &yes), FI_OK);
  EXPECT_EQ(yes, 1);
  ASSERT_EQ(fi_library_subsumes(lib, "T-72-tank", "tank", &yes), FI_OK);
  EXPECT_EQ(yes, 0);
  EXPECT_EQ(fi_library_subsumes(lib, "tank", "hovercraft", &yes), FI_ERR_VALIDATION);
  fi_library_free(lib);
  fi_library_free(nullptr);
}

TEST(CApi, ErrorsCarryStatusAndMessage) {
  fi_library* lib = nullptr;
  EXPECT_EQ(fi_library_load_file("/nonexistent/library.json", &lib), FI_ERR_IO);
  EXPECT_EQ(lib, nullptr);
  EXPECT_GT(std::strlen(fi_last_error()), 0u);
  EXPECT_EQ(fi_library_load_string("{", &lib), FI_ERR_PARSE);
  const char* cyclic = R"({"types":[{"name":"a","level":"vehicle","isa":"b"},{"name":"b","level":"vehicle","isa":"a"}],"models":[]})";
  EXPECT_EQ(fi_library_load_string(cyclic, &lib), FI_ERR_VALIDATION);
  EXPECT_NE(std::string(fi_last_error()).find("cycle"), std::string::npos);
  EXPECT_STREQ(fi_status_name(FI_ERR_MISMATCH), "mismatch");
  EXPECT_GT(std::strlen(fi_version()), 0u);
}

TEST(CApi, NullArgumentsAreRejected) {
  fi_library* lib = nullptr;
  EXPECT_EQ(fi_library_load_file(nullptr, &lib), FI_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fi_library_load_string("{}", nullptr), FI_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fi_library_counts(nullptr, nullptr, nullptr), FI_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fi_infer(nullptr, nullptr), FI_ERR_INVALID_ARGUMENT);
  fi_infer_options opts{};
  EXPECT_EQ(fi_infer(&opts, nullptr), FI_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fi_conflict_measure(0.5, nullptr), FI_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fi_oracle_run(nullptr, ".", 0, nullptr), FI_ERR_INVALID_ARGUMENT);
}

TEST(CApi, ConflictMeasure) {
  double m = -1;
  ASSERT_EQ(fi_conflict_measure(1.0, &m), FI_OK);
  EXPECT_EQ(m, 0.0);
  ASSERT_EQ(fi_conflict_measure(0.5, &m), FI_OK);
  EXPECT_EQ(m, 1.0);
  ASSERT_EQ(fi_conflict_measure(0.0, &m), FI_OK);
  EXPECT_TRUE(std::isinf(m));
  EXPECT_EQ(fi_conflict_measure(2.0, &m), FI_ERR_VALIDATION);
}

TEST(CApi, InferIsDeterministic) {
  const auto dir = std::filesystem::temp_directory_path() / "fi_capi";
  std::filesystem::create_directories(dir);
  const auto out = (dir / "report.json").string();
  const auto config = kSample + "/config.json";
  fi_infer_options opts{};
  opts.config_path = config.c_str();
  opts.out_path = out.c_str();
  char* a = nullptr;
  char* b = nullptr;
  ASSERT_EQ(fi_infer(&opts, &a), FI_OK) << fi_last_error();
  ASSERT_EQ(fi_infer(&opts, &b), FI_OK) << fi_last_error();
  const auto ra = take(a);
  EXPECT_EQ(ra, take(b));
  EXPECT_NE(ra.find("\"schema_version\""), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out));

  opts.heuristic = "best";
  EXPECT_EQ(fi_infer(&opts, nullptr), FI_ERR_USAGE);
  std::filesystem::remove_all(dir);
}

TEST(CApi, SimulateAndOracle) {
  char* s1 = nullptr;
  char* s2 = nullptr;
  const auto gt = kSample + "/battalion_truth.json";
  const auto noise = kSample + "/noise_field.json";
  ASSERT_EQ(fi_simulate(gt.c_str(), noise.c_str(), 1, 42, nullptr, &s1), FI_OK) << fi_last_error();
  ASSERT_EQ(fi_simulate(gt.c_str(), noise.c_str(), 1, 42, nullptr, &s2), FI_OK);
  EXPECT_EQ(take(s1), take(s2));

  char* report = nullptr;
  EXPECT_EQ(fi_oracle_run("skip-identity", FI_TEST_DATA "/oracle", 0, &report), FI_OK) << fi_last_error();
  EXPECT_NE(take(report).find("ok"), std::string::npos);
  EXPECT_EQ(fi_oracle_run("nope", FI_TEST_DATA "/oracle", 0, nullptr), FI_ERR_USAGE);
}

}  // namespace
