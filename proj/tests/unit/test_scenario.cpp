#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "core/scenario.hpp"

namespace forceinfer {
namespace {

using json_util::json;

std::string slurp(const std::string& path) {
  std::stringstream s;
  s << std::ifstream(path).rdbuf();
  return s.str();
}

const std::string kSample = FI_SAMPLE_DATA;

struct Sample {
  ModelLibrary lib = load_library_file(kSample + "/library.json");
  std::string truth_text = slurp(kSample + "/battalion_truth.json");
  GroundTruth gt = parse_ground_truth(truth_text);
};

std::vector<const TruthNode*> vehicles_of(const GroundTruth& gt) {
  std::vector<const TruthNode*> out;
  std::function<void(const TruthNode&)> walk = [&](const TruthNode& n) {
    if (n.is_vehicle()) out.push_back(&n);
    for (const auto& c : n.components) walk(c);
  };
  for (const auto& f : gt.forces) walk(f);
  return out;
}

Point centroid(const TruthNode& n) {
  if (n.is_vehicle()) return n.location;
  Point sum;
  for (const auto& c : n.components) {
    const Point p = centroid(c);
    sum.x += p.x;
    sum.y += p.y;
  }
  return {sum.x / n.components.size(), sum.y / n.components.size()};
}

// A report holding exactly the ground-truth forces.
json perfect_report(const GroundTruth& gt, const ModelLibrary& lib) {
  std::map<std::string, json> levels;
  int next = 0;
  std::function<void(const TruthNode&)> walk = [&](const TruthNode& n) {
    const std::string type = n.is_vehicle() ? n.type : lib.find_model(*n.model)->models_type;
    const Point at = centroid(n);
    json h{{"id", "H" + std::to_string(++next)},
           {"type", type},
           {"model", n.model ? json(*n.model) : json(nullptr)},
           {"location", {{"x", at.x}, {"y", at.y}}},
           {"posterior", 0.9},
           {"status", "active"}};
    levels[std::string(to_string(lib.type(type).level))].push_back(h);
    for (const auto& c : n.components) walk(c);
  };
  for (const auto& f : gt.forces) walk(f);
  json report{{"scenario_id", gt.scenario_id}, {"levels", json::array()}, {"conflicts", json::array()}};
  for (auto& [level, hs] : levels) report["levels"].push_back({{"level", level}, {"hypotheses", hs}});
  return report;
}

const LevelMetrics& at_level(const std::vector<LevelMetrics>& ms, Level level) {
  for (const auto& m : ms) {
    if (m.level == level) return m;
  }
  throw std::runtime_error("level missing");
}

TEST(GroundTruth, SampleIsValid) {
  Sample s;
  EXPECT_TRUE(validate_ground_truth(s.gt, s.lib).empty());
  EXPECT_EQ(s.gt.forces[0].type, "tank-battalion");
  EXPECT_EQ(vehicles_of(s.gt).size(), 10u);
}

TEST(GroundTruth, ViolationsAreReported) {
  Sample s;
  auto crowded = s.gt;
  crowded.forces[0].components[0].components[1].location = {5, 0};
  EXPECT_FALSE(validate_ground_truth(crowded, s.lib).empty());
  auto short_company = s.gt;
  short_company.forces[0].components[0].components.resize(2);
  EXPECT_FALSE(validate_ground_truth(short_company, s.lib).empty());
  auto wrong_type = s.gt;
  wrong_type.forces[0].components[0].components[0].type = "truck";
  EXPECT_FALSE(validate_ground_truth(wrong_type, s.lib).empty());
  EXPECT_THROW(parse_ground_truth("[]"), ParseError);
}

TEST(Noise, Validation) {
  EXPECT_NO_THROW(parse_noise(slurp(kSample + "/noise_field.json")).validate());
  NoiseSpec bad;
  bad.p_detect = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  NoiseSpec rows;
  rows.types = {"tank", "truck"};
  rows.misclassification = {{0.9, 0.2}, {0.0, 1.0}};
  EXPECT_THROW(rows.validate(), ValidationError);
  NoiseSpec jitter;
  jitter.location_jitter = -1;
  EXPECT_THROW(jitter.validate(), ValidationError);
}

TEST(Generate, NoiselessChannelReproducesTruth) {
  Sample s;
  NoiseSpec noise;
  const auto sc = parse_scenario(generate(s.gt, noise));
  const auto vs = vehicles_of(s.gt);
  ASSERT_EQ(sc.detections.size(), vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    EXPECT_EQ(sc.detections[i].type, vs[i]->type);
    EXPECT_EQ(sc.detections[i].location.x, vs[i]->location.x);
    EXPECT_EQ(sc.detections[i].location.y, vs[i]->location.y);
    EXPECT_EQ(sc.detections[i].heading, vs[i]->heading);
    EXPECT_EQ(sc.detections[i].likelihood_ratio, noise.lambda_hit);
  }
  EXPECT_EQ(sc.scenario_id, s.gt.scenario_id);
  ASSERT_TRUE(sc.ground_truth.has_value());
}

TEST(Generate, ZeroDetectionLeavesOnlyFalseAlarms) {
  Sample s;
  NoiseSpec noise;
  noise.p_detect = 0.0;
  noise.false_alarm_density = 2.0;
  const auto sc = parse_scenario(generate(s.gt, noise));
  EXPECT_FALSE(sc.detections.empty());
  for (const auto& d : sc.detections) {
    EXPECT_EQ(d.id.rfind("fa", 0), 0u);
    EXPECT_GE(d.location.x, s.gt.area.x_min);
    EXPECT_LE(d.location.x, s.gt.area.x_max);
    EXPECT_EQ(d.likelihood_ratio, noise.lambda_false_alarm);
  }
}

TEST(Generate, ByteIdenticalGivenSeed) {
  Sample s;
  auto noise = parse_noise(slurp(kSample + "/noise_field.json"));
  const auto a = generate(s.gt, noise);
  EXPECT_EQ(a, generate(s.gt, noise));
  noise.seed += 1;
  EXPECT_NE(a, generate(s.gt, noise));
}

TEST(Generate, RatesMatchWithinThreeSigma) {
  Sample s;
  NoiseSpec noise;
  noise.p_detect = 0.6;
  noise.false_alarm_density = 0.5;
  const std::size_t runs = 300;
  const double n_vehicles = static_cast<double>(vehicles_of(s.gt).size());
  double detected = 0, alarms = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    noise.seed = 1000 + r;
    for (const auto& d : parse_scenario(generate(s.gt, noise)).detections) {
      (d.id.rfind("fa", 0) == 0 ? alarms : detected) += 1;
    }
  }
  const double trials = runs * n_vehicles;
  EXPECT_LE(std::abs(detected - trials * 0.6), 3 * std::sqrt(trials * 0.6 * 0.4));
  const double fa_mean = runs * noise.false_alarm_density * s.gt.area.square_km();
  EXPECT_LE(std::abs(alarms - fa_mean), 3 * std::sqrt(fa_mean));
}

TEST(Generate, MisclassificationFollowsMatrix) {
  Sample s;
  NoiseSpec noise;
  noise.types = {"T-72-tank", "tank"};
  noise.misclassification = {{0.7, 0.3}, {0.0, 1.0}};
  double swapped = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    noise.seed = seed;
    for (const auto& d : parse_scenario(generate(s.gt, noise)).detections) {
      if (d.id == "d0001" || d.id == "d0002" || d.id == "d0003") {
        total += 1;
        if (d.type == "tank") {
          swapped += 1;
          EXPECT_NEAR(d.likelihood_ratio, std::max(noise.lambda_floor, noise.lambda_hit * 0.3 / 0.7), 1e-12);
        }
      }
    }
  }
  EXPECT_LE(std::abs(swapped - total * 0.3), 3 * std::sqrt(total * 0.3 * 0.7));
}

TEST(Score, PerfectReport) {
  Sample s;
  const auto ms = score(perfect_report(s.gt, s.lib), json::parse(s.truth_text), s.lib);
  ASSERT_EQ(ms.size(), 3u);
  for (const auto& m : ms) {
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
  }
}

TEST(Score, EmptyReportHasZeroRecall) {
  Sample s;
  const json empty{{"scenario_id", s.gt.scenario_id}, {"levels", json::array()}};
  for (const auto& m : score(empty, json::parse(s.truth_text), s.lib)) {
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.hypothesis_count, 0u);
  }
}

TEST(Score, FalseAlarmOnlyReportHasZeroPrecision) {
  Sample s;
  json report{{"scenario_id", s.gt.scenario_id}, {"levels", json::array()}};
  json hs = json::array();
  for (int i = 0; i < 4; ++i) {
    hs.push_back({{"id", "H" + std::to_string(i)},
                  {"type", "tank"},
                  {"model", nullptr},
                  {"location", {{"x", -900.0 + i}, {"y", 1900.0}}},
                  {"posterior", 0.7},
                  {"status", "active"}});
  }
  report["levels"].push_back({{"level", "vehicle"}, {"hypotheses", hs}});
  const auto& m = at_level(score(report, json::parse(s.truth_text), s.lib), Level::vehicle);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.hypothesis_count, 4u);
}

TEST(Score, InvariantUnderRelabelling) {
  Sample s;
  auto report = perfect_report(s.gt, s.lib);
  // Drop one company and reverse hypothesis order with fresh ids.
  auto& array = report["levels"][0]["level"] == "array" ? report["levels"][0] : report["levels"][1];
  array["hypotheses"].erase(array["hypotheses"].begin());
  const auto before = score(report, json::parse(s.truth_text), s.lib);
  for (auto& lv : report["levels"]) {
    auto& hs = lv["hypotheses"];
    std::reverse(hs.begin(), hs.end());
    for (auto& h : hs) h["id"] = "X" + h["id"].get<std::string>();
  }
  const auto after = score(report, json::parse(s.truth_text), s.lib);
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].matched, after[i].matched);
    EXPECT_EQ(before[i].precision, after[i].precision);
    EXPECT_EQ(before[i].recall, after[i].recall);
  }
  const auto& m = at_level(after, Level::array);
  EXPECT_EQ(m.matched, 2u);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_EQ(m.precision, 1.0);
}

TEST(Score, ExcludedHypothesesAreIgnored) {
  Sample s;
  auto report = perfect_report(s.gt, s.lib);
  for (auto& lv : report["levels"]) {
    for (auto& h : lv["hypotheses"]) h["status"] = "excluded";
  }
  for (const auto& m : score(report, json::parse(s.truth_text), s.lib)) EXPECT_EQ(m.hypothesis_count, 0u);
}

TEST(Score, ScenarioMismatch) {
  Sample s;
  json report{{"scenario_id", "other"}, {"levels", json::array()}};
  EXPECT_THROW(score(report, json::parse(s.truth_text), s.lib), ValidationError);
}

}  // namespace
}  // namespace forceinfer
