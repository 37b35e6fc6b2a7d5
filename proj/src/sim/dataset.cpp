#include "gtforge/sim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pcd_io.hpp"
#include "gtforge/geom/pose_json.hpp"

namespace gtforge::sim {

namespace {

constexpr std::uint64_t kSpinningStream = 1;
constexpr std::uint64_t kSolidStream = 2;
constexpr double kEighthTurn = 0.25 * std::numbers::pi;

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame) {
  return make_rng(seed, stream, frame)();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace

Pose default_extrinsic() { return Pose::Translation(Eigen::Vector3d(0.12, 0.0, -0.10)); }

MotionScript default_script(const std::string& scene_preset) {
  using Eigen::Vector3d;
  if (scene_preset == "room_10x8x3") {
    // The solid-state sensor looks forward with a narrow field of view, so
    // every stop faces into a corner: two walls plus floor and ceiling keep
    // each submap fully constrained, and all stops share the x = 5 wall.
    // Legs mix forward, lateral and yawed motion with height changes.
    MotionScript::Builder b(pose_from_ypr(0.0, 0.0, 0.0, Vector3d(-3.0, -2.0, 1.0)));
    b.hold(3.0).move_to(pose_from_ypr(-0.6, 0.0, 0.0, Vector3d(2.0, -2.0, 1.2)), 10.0).hold(3.0);
    b.move_to(pose_from_ypr(0.6, 0.0, 0.0, Vector3d(2.0, 2.0, 1.0)), 8.0).hold(3.0);
    b.move_to(pose_from_ypr(0.3, 0.0, 0.0, Vector3d(-2.0, 2.0, 1.15)), 10.0).hold(3.0);
    b.move_to(pose_from_ypr(-0.4, 0.0, 0.0, Vector3d(-3.0, -1.0, 0.9)), 10.0).hold(3.0);
    b.move_to(pose_from_ypr(0.5, 0.0, 0.0, Vector3d(0.0, 0.0, 1.05)), 8.0).hold(3.0);
    return b.build();
  }
  if (scene_preset == "corridor_40m") {
    // Straight run at 1 m/s with a stop every 5 m.
    MotionScript::Builder b(pose_from_ypr(0.0, 0.0, 0.0, Vector3d(1.5, 0.0, 1.0)));
    b.hold(3.0);
    for (int i = 0; i < 7; ++i) b.move_by({5.0, 0.0, 0.0}, 0.0, 5.0).hold(3.0);
    return b.build();
  }
  if (scene_preset == "open_road") {
    MotionScript::Builder b(pose_from_ypr(0.0, 0.0, 0.0, Vector3d(0.0, 0.0, 1.5)));
    b.hold(3.0);
    for (int i = 0; i < 4; ++i) b.move_by({20.0, 0.0, 0.0}, 0.0, 10.0).hold(3.0);
    return b.build();
  }
  if (scene_preset == "forest") {
    MotionScript::Builder b(pose_from_ypr(0.0, 0.0, 0.0, Vector3d(-8.0, -8.0, 1.2)));
    b.hold(3.0).move_by({8.0, 0.0, 0.0}, 0.0, 8.0).hold(3.0);
    b.move_by(Vector3d::Zero(), kEighthTurn, 3.0).move_by({8.0, 0.0, 0.0}, 0.0, 8.0).hold(3.0);
    return b.build();
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown scene preset '{}'", scene_preset));
}

SimulationSetup default_setup(const std::string& scene_preset, std::uint64_t seed) {
  SimulationSetup s;
  s.scene = scene_preset;
  s.script = default_script(scene_preset);
  s.extrinsic = default_extrinsic();
  s.seed = seed;
  return s;
}

std::vector<double> scan_stamps(const MotionScript& script, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "scan rate must be positive");
  const auto n = static_cast<std::size_t>(std::floor(script.duration() * rate + 1e-9)) + 1;
  std::vector<double> stamps(n);
  for (std::size_t k = 0; k < n; ++k) stamps[k] = script.start_time() + double(k) / rate;
  return stamps;
}

SimulatedScans::SimulatedScans(const Scene& scene, const SimulationSetup& setup, Which which)
    : scene_(scene), setup_(setup), which_(which) {
  const SensorSpec& spec = which == Which::Spinning ? setup.spinning : setup.solid;
  spec.validate();
  stamps_ = scan_stamps(setup.script, spec.rate);
}

Pose SimulatedScans::sensor_pose(std::size_t i) const {
  const Pose body = setup_.script.pose_at(stamps_[i]);
  return which_ == Which::Spinning ? body : (body * setup_.extrinsic).with_stamp(stamps_[i]);
}

PointCloud SimulatedScans::at(std::size_t i) const {
  const Pose pose = sensor_pose(i);
  if (which_ == Which::Spinning) {
    return simulate_spinning_scan(scene_, pose, setup_.spinning,
                                  frame_seed(setup_.seed, kSpinningStream, i));
  }
  return simulate_solid_state_scan(scene_, pose, setup_.solid, stamps_[i],
                                   frame_seed(setup_.seed, kSolidStream, i));
}

SimulatedDataset::SimulatedDataset(SimulationSetup s)
    : setup(std::move(s)),
      scene(build_scene(setup.scene)),
      spinning(scene, setup, SimulatedScans::Which::Spinning),
      solid(scene, setup, SimulatedScans::Which::Solid),
      imu(synthesize_imu(setup.script, setup.imu_rate, setup.noise_accel, setup.noise_gyro, setup.seed)),
      world_from_first(spinning.sensor_pose(0)) {
  const Pose first_inv = world_from_first.inverse();
  for (std::size_t i = 0; i < spinning.size(); ++i) {
    truth.push_back((first_inv * spinning.sensor_pose(i)).with_stamp(spinning.stamp(i)));
  }
}

nlohmann::json to_json(const SensorSpec& spec) {
  return {{"name", spec.name},
          {"kind", to_string(spec.kind)},
          {"channels", spec.channels},
          {"fov_h", spec.fov_h},
          {"fov_v", spec.fov_v},
          {"res_h", spec.res_h},
          {"res_v", spec.res_v},
          {"points_per_second", spec.points_per_second},
          {"max_range", spec.max_range},
          {"range_noise_sigma", spec.range_noise_sigma},
          {"rate", spec.rate}};
}

SensorSpec sensor_spec_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "sensor spec must be an object");
    // Start from the named preset when there is one, so partial overrides work.
    SensorSpec s;
    if (j.contains("name")) {
      s.name = j.at("name").get<std::string>();
      const auto presets = sensor_presets();
      if (std::find(presets.begin(), presets.end(), s.name) != presets.end()) s = sensor_preset(s.name);
    }
    for (const auto& [key, v] : j.items()) {
      if (key == "name") continue;
      else if (key == "kind") s.kind = sensor_kind_from_string(v.get<std::string>());
      else if (key == "channels") s.channels = v.get<int>();
      else if (key == "fov_h") s.fov_h = v.get<double>();
      else if (key == "fov_v") s.fov_v = v.get<double>();
      else if (key == "res_h") s.res_h = v.get<double>();
      else if (key == "res_v") s.res_v = v.get<double>();
      else if (key == "points_per_second") s.points_per_second = v.get<double>();
      else if (key == "max_range") s.max_range = v.get<double>();
      else if (key == "range_noise_sigma") s.range_noise_sigma = v.get<double>();
      else if (key == "rate") s.rate = v.get<double>();
      else throw Error(ErrorCode::InvalidArgument, fmt::format("unknown sensor key '{}'", key));
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("malformed sensor spec: {}", e.what()));
  }
}

void export_dataset(const SimulationSetup& setup, const std::filesystem::path& out_dir) {
  const SimulatedDataset data(setup);
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"scans_spinning", "scans_solid"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw Error(ErrorCode::Io, fmt::format("cannot create {}: {}", (out_dir / sub).string(), ec.message()));
  }

  for (std::size_t i = 0; i < data.spinning.size(); ++i) {
    write_pcd(out_dir / "scans_spinning" / fmt::format("{:06d}.pcd", i), data.spinning.at(i));
  }
  for (std::size_t i = 0; i < data.solid.size(); ++i) {
    write_pcd(out_dir / "scans_solid" / fmt::format("{:06d}.pcd", i), data.solid.at(i));
  }
  spdlog::info("simulate: wrote {} spinning and {} solid-state scans to {}", data.spinning.size(),
               data.solid.size(), out_dir.string());
  write_imu_csv(out_dir / "imu.csv", data.imu);
  write_tum(out_dir / "truth.tum", data.truth);

  const nlohmann::json extrinsics = {{"spinning_from_solid", pose_to_json(setup.extrinsic)}};
  write_text(out_dir / "extrinsics.json", extrinsics.dump(2) + "\n");

  nlohmann::json waypoints = nlohmann::json::array();
  for (const auto& w : setup.script.waypoints()) {
    nlohmann::json p = pose_to_json(w.pose);
    p["t"] = w.t;
    waypoints.push_back(std::move(p));
  }
  nlohmann::json stops = nlohmann::json::array();
  for (const auto& w : setup.script.stop_windows()) stops.push_back({w.start, w.end});
  const nlohmann::json manifest = {
      {"generator", "gtforge"},
      {"seed", setup.seed},
      {"scene", setup.scene},
      {"spinning", to_json(setup.spinning)},
      {"solid", to_json(setup.solid)},
      {"imu", {{"rate", setup.imu_rate}, {"noise_accel", setup.noise_accel}, {"noise_gyro", setup.noise_gyro}}},
      {"waypoints", waypoints},
      {"stop_windows", stops},
      {"world_from_first", pose_to_json(data.world_from_first)},
      {"counts", {{"spinning", data.spinning.size()}, {"solid", data.solid.size()}, {"imu", data.imu.size()}}},
  };
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace gtforge::sim
