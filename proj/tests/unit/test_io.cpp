#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "nbvcalib/error.hpp"
#include "nbvcalib/io.hpp"

using namespace nbvcalib;

namespace {

template <typename F>
std::pair<ErrorCode, std::string> error_of(F&& f) {
  try {
    f();
  } catch (const CalibrationError& e) {
    return {e.code(), e.what()};
  }
  ADD_FAILURE() << "no CalibrationError thrown";
  return {ErrorCode::kInvalidArgument, ""};
}

Dataset sample_dataset() {
  const Scene s = default_scene();
  const CandidateSet c = generate_candidates(CandidateGeometry{}, s.board, s.intrinsics, s.ground_truth);
  Dataset d{s.intrinsics, s.board, {}};
  for (std::size_t i : {1u, 17u, 40u}) d.sets.push_back(simulate_measurement(s, c.poses[i], i));
  return d;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nbvcalib_test_" + name);
}

}  // namespace

TEST(Io, DatasetRoundTripIsExact) {
  const Dataset d = sample_dataset();
  const auto path = temp_path("dataset.json");
  save_dataset(path, d);
  const Dataset back = load_dataset(path);
  ASSERT_EQ(back.sets.size(), d.sets.size());
  EXPECT_EQ(back.board.rows, d.board.rows);
  EXPECT_EQ(back.board.spacing, d.board.spacing);
  EXPECT_EQ(back.intrinsics.fx, d.intrinsics.fx);
  for (std::size_t k = 0; k < d.sets.size(); ++k) {
    EXPECT_EQ(back.sets[k].observations(), d.sets[k].observations());
    EXPECT_TRUE(back.sets[k].ee_from_base().is_approx(d.sets[k].ee_from_base(), 1e-12));
  }
  std::filesystem::remove(path);
}

TEST(Io, ConfigRoundTrip) {
  ExperimentConfig c = default_experiment_config();
  c.seeds = {3, 9};
  c.policies = {{PolicyKind::kMaxDistance, DistanceMode::kMaxSum}};
  c.nbv.max_additional_views = 7;
  c.scene.noise.pixel_sigma = 1.0;
  const ExperimentConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back.seeds, c.seeds);
  ASSERT_EQ(back.policies.size(), 1u);
  EXPECT_EQ(back.policies[0].distance_mode, DistanceMode::kMaxSum);
  EXPECT_EQ(back.nbv.max_additional_views, 7u);
  EXPECT_EQ(back.scene.noise.pixel_sigma, 1.0);
  EXPECT_NEAR(back.scene.noise.robot_rot_sigma, c.scene.noise.robot_rot_sigma, 1e-18);
  EXPECT_TRUE(back.scene.ground_truth.cam_from_ee.is_approx(c.scene.ground_truth.cam_from_ee, 1e-12));
  EXPECT_TRUE(back.scene.ground_truth.base_from_world.is_approx(c.scene.ground_truth.base_from_world, 1e-12));
}

TEST(Io, CandidatesRoundTrip) {
  const Scene s = default_scene();
  const CandidateSet c = generate_candidates(CandidateGeometry{}, s.board, s.intrinsics, s.ground_truth);
  const CandidateSet back = parse_candidates(serialize_candidates(c));
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_TRUE(back.poses[i].is_approx(c.poses[i], 1e-12));
}

TEST(Io, NonUnitQuaternionNamesTheSet) {
  std::string text = serialize_dataset(sample_dataset());
  const auto pos = text.find("\"quaternion_wxyz\"", text.find("\"sets\""));
  const auto second = text.find("\"quaternion_wxyz\"", pos + 1);
  const auto open = text.find('[', second);
  const auto close = text.find(']', open);
  text.replace(open, close - open + 1, "[0.9, 0.0, 0.0, 0.0]");
  const auto [code, what] = error_of([&] { parse_dataset(text); });
  EXPECT_EQ(code, ErrorCode::kInvariantViolation);
  EXPECT_NE(what.find("sets[1]"), std::string::npos) << what;
}

TEST(Io, MissingIntrinsicsIsParseError) {
  const auto [code, what] =
      error_of([] { parse_dataset(R"({"format":"nbvcalib-dataset","version":1,"board":{},"sets":[]})"); });
  EXPECT_EQ(code, ErrorCode::kParseError);
  EXPECT_NE(what.find("intrinsics"), std::string::npos);
}

TEST(Io, UnknownVersionIsRejected) {
  const auto [code, what] = error_of([] { parse_dataset(R"({"format":"nbvcalib-dataset","version":99})"); });
  EXPECT_EQ(code, ErrorCode::kVersionMismatch);
}

TEST(Io, MalformedJsonIsParseError) {
  EXPECT_EQ(error_of([] { parse_config("{not json"); }).first, ErrorCode::kParseError);
  EXPECT_EQ(error_of([] { load_config("/nonexistent/config.json"); }).first, ErrorCode::kParseError);
}

TEST(Io, UnknownMarkerIsInvariantViolation) {
  std::string text = serialize_dataset(sample_dataset());
  const auto obs = text.find("\"observations\"");
  const auto first = text.find('[', text.find('[', obs) + 1);
  const auto comma = text.find(',', first);
  text.replace(first + 1, comma - first - 1, "99");
  EXPECT_EQ(error_of([&] { parse_dataset(text); }).first, ErrorCode::kInvariantViolation);
}

TEST(Io, ConfigInvariants) {
  ExperimentConfig c = default_experiment_config();
  c.seeds.clear();
  EXPECT_EQ(error_of([&] { parse_config(serialize_config(c)); }).first, ErrorCode::kInvariantViolation);
  c = default_experiment_config();
  c.validation_size = 1;
  EXPECT_EQ(error_of([&] { parse_config(serialize_config(c)); }).first, ErrorCode::kInvariantViolation);
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 1e22}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::nan("")), "");
  EXPECT_EQ(format_double(0.5), "0.5");
}
