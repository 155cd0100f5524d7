#include "nbvcalib/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "nbvcalib/error.hpp"

namespace nbvcalib {

namespace {

using json = nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr std::string_view kConfigFormat = "nbvcalib-config";
constexpr std::string_view kDatasetFormat = "nbvcalib-dataset";
constexpr std::string_view kCandidatesFormat = "nbvcalib-candidates";

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw CalibrationError(ErrorCode::kParseError, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T value(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    parse_fail(where + "." + key, e.what());
  }
}

template <typename T>
T value_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return value<T>(obj, key, where);
}

json parse_document(std::string_view text, std::string_view format) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail("document", e.what());
  }
  const auto fmt = value<std::string>(doc, "format", "document");
  if (fmt != format) {
    parse_fail("document.format", "expected '" + std::string(format) + "', got '" + fmt + "'");
  }
  const int version = value<int>(doc, "version", "document");
  if (version != kFormatVersion) {
    throw CalibrationError(ErrorCode::kVersionMismatch,
                           "unsupported " + fmt + " version " + std::to_string(version));
  }
  return doc;
}

json header(std::string_view format) {
  json doc = json::object();
  doc["format"] = format;
  doc["version"] = kFormatVersion;
  return doc;
}

json pose_to_json(const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  const Vector3& t = pose.translation();
  return {{"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"translation_m", {t.x(), t.y(), t.z()}}};
}

Pose pose_from_json(const json& j, const std::string& where) {
  const auto q = value<std::vector<double>>(j, "quaternion_wxyz", where);
  const auto t = value<std::vector<double>>(j, "translation_m", where);
  if (q.size() != 4) parse_fail(where + ".quaternion_wxyz", "expected 4 numbers");
  if (t.size() != 3) parse_fail(where + ".translation_m", "expected 3 numbers");
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  const double norm = quat.norm();
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw CalibrationError(ErrorCode::kInvariantViolation,
                           where + ": quaternion norm " + format_double(norm) + " is not 1");
  }
  return Pose::from_quaternion(quat, Vector3(t[0], t[1], t[2]));
}

json intrinsics_to_json(const CameraIntrinsics& K) {
  return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j, const std::string& where) {
  CameraIntrinsics K;
  K.fx = value<double>(j, "fx", where);
  K.fy = value<double>(j, "fy", where);
  K.cx = value<double>(j, "cx", where);
  K.cy = value<double>(j, "cy", where);
  K.width = value<int>(j, "width", where);
  K.height = value<int>(j, "height", where);
  try {
    K.validate();
  } catch (const CalibrationError& e) {
    throw CalibrationError(ErrorCode::kInvariantViolation, where + ": " + e.what());
  }
  return K;
}

json board_to_json(const TargetBoard& b) {
  return {{"rows", b.rows}, {"cols", b.cols}, {"spacing_m", b.spacing}};
}

TargetBoard board_from_json(const json& j, const std::string& where) {
  try {
    return make_board(value<int>(j, "rows", where), value<int>(j, "cols", where),
                      value<double>(j, "spacing_m", where));
  } catch (const CalibrationError& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw CalibrationError(ErrorCode::kInvariantViolation, where + ": " + e.what());
  }
}

json noise_to_json(const NoiseModel& n) {
  return {{"pixel_sigma_px", n.pixel_sigma},
          {"robot_rot_sigma_deg", n.robot_rot_sigma / kDeg},
          {"robot_trans_sigma_mm", n.robot_trans_sigma * 1000.0}};
}

NoiseModel noise_from_json(const json& j, const std::string& where) {
  NoiseModel n;
  n.pixel_sigma = value<double>(j, "pixel_sigma_px", where);
  n.robot_rot_sigma = value<double>(j, "robot_rot_sigma_deg", where) * kDeg;
  n.robot_trans_sigma = value<double>(j, "robot_trans_sigma_mm", where) / 1000.0;
  try {
    n.validate();
  } catch (const CalibrationError& e) {
    throw CalibrationError(ErrorCode::kInvariantViolation, where + ": " + e.what());
  }
  return n;
}

json geometry_to_json(const CandidateGeometry& g) {
  return {{"radius_min_m", g.radius_min},
          {"radius_max_m", g.radius_max},
          {"radius_count", g.radius_count},
          {"azimuth_count", g.azimuth_count},
          {"azimuth_offset_deg", g.azimuth_offset_deg},
          {"elevation_min_deg", g.elevation_min_deg},
          {"elevation_max_deg", g.elevation_max_deg},
          {"elevation_count", g.elevation_count},
          {"roll_deg", g.roll_deg},
          {"image_margin_px", g.image_margin_px}};
}

CandidateGeometry geometry_from_json(const json& j, const std::string& where) {
  CandidateGeometry g;
  g.radius_min = value<double>(j, "radius_min_m", where);
  g.radius_max = value<double>(j, "radius_max_m", where);
  g.radius_count = value<int>(j, "radius_count", where);
  g.azimuth_count = value<int>(j, "azimuth_count", where);
  g.azimuth_offset_deg = value_or<double>(j, "azimuth_offset_deg", 0.0, where);
  g.elevation_min_deg = value<double>(j, "elevation_min_deg", where);
  g.elevation_max_deg = value<double>(j, "elevation_max_deg", where);
  g.elevation_count = value<int>(j, "elevation_count", where);
  g.roll_deg = value_or<double>(j, "roll_deg", 0.0, where);
  g.image_margin_px = value_or<double>(j, "image_margin_px", g.image_margin_px, where);
  return g;
}

json solver_to_json(const SolverConfig& s) {
  return {{"max_iterations", s.max_iterations},
          {"absolute_cost_tolerance", s.absolute_cost_tolerance},
          {"relative_cost_tolerance", s.relative_cost_tolerance},
          {"step_tolerance", s.step_tolerance},
          {"initial_damping", s.initial_damping},
          {"damping_increase", s.damping_increase},
          {"damping_decrease", s.damping_decrease}};
}

SolverConfig solver_from_json(const json& j, const std::string& where) {
  SolverConfig s;
  s.max_iterations = value_or<int>(j, "max_iterations", s.max_iterations, where);
  s.absolute_cost_tolerance =
      value_or<double>(j, "absolute_cost_tolerance", s.absolute_cost_tolerance, where);
  s.relative_cost_tolerance =
      value_or<double>(j, "relative_cost_tolerance", s.relative_cost_tolerance, where);
  s.step_tolerance = value_or<double>(j, "step_tolerance", s.step_tolerance, where);
  s.initial_damping = value_or<double>(j, "initial_damping", s.initial_damping, where);
  s.damping_increase = value_or<double>(j, "damping_increase", s.damping_increase, where);
  s.damping_decrease = value_or<double>(j, "damping_decrease", s.damping_decrease, where);
  return s;
}

std::string distance_mode_name(DistanceMode m) {
  return m == DistanceMode::kMaxMin ? "max_min" : "max_sum";
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

void ExperimentConfig::validate() const {
  const auto bad = [](const std::string& what) {
    throw CalibrationError(ErrorCode::kInvariantViolation, what);
  };
  if (policies.empty()) bad("at least one policy is required");
  if (seeds.empty()) bad("at least one seed is required");
  if (validation_size < 2) bad("validation size must be >= 2");
  scene.intrinsics.validate();
  scene.noise.validate();
  candidates.validate();
  nbv.validate();
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  json doc = header(kConfigFormat);
  doc["scene"] = {{"intrinsics", intrinsics_to_json(c.scene.intrinsics)},
                  {"board", board_to_json(c.scene.board)},
                  {"ground_truth",
                   {{"cam_from_ee", pose_to_json(c.scene.ground_truth.cam_from_ee)},
                    {"base_from_world", pose_to_json(c.scene.ground_truth.base_from_world)}}},
                  {"noise", noise_to_json(c.scene.noise)}};
  doc["candidates"] = geometry_to_json(c.candidates);
  doc["nbv"] = {{"initial_sets", c.nbv.initial_sets},
                {"max_additional_views", c.nbv.max_additional_views},
                {"gain_threshold_nats", c.nbv.gain_threshold},
                {"candidate_budget", c.nbv.candidate_budget},
                {"exclude_visited", c.nbv.exclude_visited},
                {"covariance_scale", c.nbv.covariance_scale}};
  doc["solver"] = solver_to_json(c.nbv.solver);
  json policies = json::array();
  DistanceMode mode = DistanceMode::kMaxMin;
  for (const auto& p : c.policies) {
    policies.push_back(std::string(to_string(p.kind)));
    if (p.kind == PolicyKind::kMaxDistance) mode = p.distance_mode;
  }
  doc["policies"] = policies;
  doc["max_distance_mode"] = distance_mode_name(mode);
  doc["seeds"] = c.seeds;
  doc["validation_size"] = c.validation_size;
  doc["scatter"] = c.scatter;
  doc["output"] = {{"out_dir", c.out_dir.string()}};
  return dump(doc);
}

ExperimentConfig parse_config(std::string_view text) {
  const json doc = parse_document(text, kConfigFormat);
  ExperimentConfig c;
  const json& scene = field(doc, "scene", "config");
  c.scene.intrinsics = intrinsics_from_json(field(scene, "intrinsics", "scene"), "scene.intrinsics");
  c.scene.board = board_from_json(field(scene, "board", "scene"), "scene.board");
  const json& gt = field(scene, "ground_truth", "scene");
  c.scene.ground_truth.cam_from_ee =
      pose_from_json(field(gt, "cam_from_ee", "scene.ground_truth"), "scene.ground_truth.cam_from_ee");
  c.scene.ground_truth.base_from_world = pose_from_json(
      field(gt, "base_from_world", "scene.ground_truth"), "scene.ground_truth.base_from_world");
  c.scene.noise = noise_from_json(field(scene, "noise", "scene"), "scene.noise");
  c.candidates = geometry_from_json(field(doc, "candidates", "config"), "candidates");

  const json& nbv = field(doc, "nbv", "config");
  c.nbv.initial_sets = value<std::size_t>(nbv, "initial_sets", "nbv");
  c.nbv.max_additional_views = value<std::size_t>(nbv, "max_additional_views", "nbv");
  if (field(nbv, "gain_threshold_nats", "nbv").is_string()) {
    // JSON has no infinity literal.
    const auto s = value<std::string>(nbv, "gain_threshold_nats", "nbv");
    if (s != "inf") parse_fail("nbv.gain_threshold_nats", "expected a number or \"inf\"");
    c.nbv.gain_threshold = std::numeric_limits<double>::infinity();
  } else {
    c.nbv.gain_threshold = value<double>(nbv, "gain_threshold_nats", "nbv");
  }
  c.nbv.candidate_budget = value_or<std::size_t>(nbv, "candidate_budget", 0, "nbv");
  c.nbv.exclude_visited = value_or<bool>(nbv, "exclude_visited", false, "nbv");
  c.nbv.covariance_scale = value_or<double>(nbv, "covariance_scale", 1.0, "nbv");
  if (doc.contains("solver")) c.nbv.solver = solver_from_json(doc["solver"], "solver");

  DistanceMode mode = DistanceMode::kMaxMin;
  const auto mode_name = value_or<std::string>(doc, "max_distance_mode", "max_min", "config");
  if (mode_name == "max_sum") {
    mode = DistanceMode::kMaxSum;
  } else if (mode_name != "max_min") {
    parse_fail("config.max_distance_mode", "expected 'max_min' or 'max_sum'");
  }
  c.policies.clear();
  for (const auto& name : value<std::vector<std::string>>(doc, "policies", "config")) {
    try {
      c.policies.push_back({parse_policy(name), mode});
    } catch (const CalibrationError& e) {
      parse_fail("config.policies", e.what());
    }
  }
  c.seeds = value<std::vector<std::uint64_t>>(doc, "seeds", "config");
  c.validation_size = value<std::size_t>(doc, "validation_size", "config");
  c.scatter = value_or<bool>(doc, "scatter", true, "config");
  if (doc.contains("output")) {
    c.out_dir = value_or<std::string>(doc["output"], "out_dir", "out", "output");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  write_text_file(path, serialize_config(config));
}

std::string serialize_dataset(const Dataset& d) {
  json doc = header(kDatasetFormat);
  doc["intrinsics"] = intrinsics_to_json(d.intrinsics);
  doc["board"] = board_to_json(d.board);
  json sets = json::array();
  for (const auto& z : d.sets) {
    json obs = json::array();
    for (const auto& o : z.observations()) obs.push_back({o.marker_id, o.u, o.v});
    sets.push_back({{"robot_pose", pose_to_json(z.ee_from_base())}, {"observations", obs}});
  }
  doc["sets"] = sets;
  return dump(doc);
}

Dataset parse_dataset(std::string_view text) {
  const json doc = parse_document(text, kDatasetFormat);
  Dataset d;
  d.intrinsics = intrinsics_from_json(field(doc, "intrinsics", "dataset"), "intrinsics");
  d.board = board_from_json(field(doc, "board", "dataset"), "board");
  const json& sets = field(doc, "sets", "dataset");
  if (!sets.is_array()) parse_fail("dataset.sets", "expected an array");
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const std::string where = "sets[" + std::to_string(k) + "]";
    const Pose robot = pose_from_json(field(sets[k], "robot_pose", where), where + ".robot_pose");
    const json& obs = field(sets[k], "observations", where);
    if (!obs.is_array()) parse_fail(where + ".observations", "expected an array");
    std::vector<PixelObservation> list;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string ow = where + ".observations[" + std::to_string(i) + "]";
      if (!obs[i].is_array() || obs[i].size() != 3) parse_fail(ow, "expected [marker_id, u, v]");
      PixelObservation o;
      try {
        o.marker_id = obs[i][0].get<int>();
        o.u = obs[i][1].get<double>();
        o.v = obs[i][2].get<double>();
      } catch (const json::exception& e) {
        parse_fail(ow, e.what());
      }
      if (!d.board.has_marker(o.marker_id)) {
        throw CalibrationError(ErrorCode::kInvariantViolation,
                               ow + ": marker id " + std::to_string(o.marker_id) + " is not on the board");
      }
      list.push_back(o);
    }
    try {
      d.sets.emplace_back(robot, std::move(list));
    } catch (const CalibrationError& e) {
      throw CalibrationError(ErrorCode::kInvariantViolation, where + ": " + e.what());
    }
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_text_file(path)); }

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_text_file(path, serialize_dataset(dataset));
}

std::string serialize_candidates(const CandidateSet& candidates) {
  json doc = header(kCandidatesFormat);
  json list = json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    json entry = pose_to_json(candidates.poses[i]);
    entry["index"] = i;
    list.push_back(entry);
  }
  doc["candidates"] = list;
  return dump(doc);
}

CandidateSet parse_candidates(std::string_view text) {
  const json doc = parse_document(text, kCandidatesFormat);
  const json& list = field(doc, "candidates", "document");
  if (!list.is_array()) parse_fail("candidates", "expected an array");
  CandidateSet out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "candidates[" + std::to_string(i) + "]";
    if (list[i].contains("index") && value<std::size_t>(list[i], "index", where) != i) {
      throw CalibrationError(ErrorCode::kInvariantViolation, where + ": index must equal position");
    }
    out.poses.push_back(pose_from_json(list[i], where));
  }
  return out;
}

CandidateSet load_candidates(const std::filesystem::path& path) {
  return parse_candidates(read_text_file(path));
}

void save_candidates(const std::filesystem::path& path, const CandidateSet& candidates) {
  write_text_file(path, serialize_candidates(candidates));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CalibrationError(ErrorCode::kParseError, "cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "cannot write '" + path.string() + "'");
  }
  out << text;
}

}  // namespace nbvcalib
