#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/scan_sequence.hpp"
#include "gtforge/pipeline/imu.hpp"
#include "gtforge/sim/lidar.hpp"
#include "gtforge/sim/motion.hpp"
#include "gtforge/sim/scene.hpp"

namespace gtforge::sim {

struct SimulationSetup {
  std::string scene = "room_10x8x3";
  MotionScript script;
  SensorSpec spinning = sensor_preset("vlp16");
  SensorSpec solid = sensor_preset("avia");
  Pose extrinsic;  // spinning-from-solid
  double imu_rate = 200.0;
  double noise_accel = 0.001;  // m/s^2
  double noise_gyro = 0.001;   // rad/s
  std::uint64_t seed = 0;
};

/// Solid-state sensor mounted just below and ahead of the spinning one.
Pose default_extrinsic();

/// Stop-and-go script suited to each scene preset (starting with a stop).
MotionScript default_script(const std::string& scene_preset);

/// Setup with the preset's default script and sensors.
SimulationSetup default_setup(const std::string& scene_preset, std::uint64_t seed);

/// Scan stamps k / rate for k = 0 .. floor(duration * rate).
std::vector<double> scan_stamps(const MotionScript& script, double rate);

/// Scans rendered on demand; a pure function of (setup, index).
class SimulatedScans final : public ScanSequence {
 public:
  enum class Which { Spinning, Solid };
  SimulatedScans(const Scene& scene, const SimulationSetup& setup, Which which);

  std::size_t size() const override { return stamps_.size(); }
  double stamp(std::size_t i) const override { return stamps_[i]; }
  PointCloud at(std::size_t i) const override;
  /// World-from-sensor pose of scan i.
  Pose sensor_pose(std::size_t i) const;

 private:
  const Scene& scene_;
  const SimulationSetup& setup_;
  Which which_;
  std::vector<double> stamps_;
};

/// Everything a run needs, with exact truth.
struct SimulatedDataset {
  explicit SimulatedDataset(SimulationSetup setup);
  SimulatedDataset(const SimulatedDataset&) = delete;
  SimulatedDataset& operator=(const SimulatedDataset&) = delete;

  SimulationSetup setup;
  Scene scene;
  SimulatedScans spinning;
  SimulatedScans solid;
  std::vector<ImuSample> imu;
  /// Spinning-sensor poses expressed relative to the first spinning scan.
  Trajectory truth;
  /// World pose of the first spinning scan (maps truth/map frame to the scene).
  Pose world_from_first;
};

nlohmann::json to_json(const SensorSpec& spec);
SensorSpec sensor_spec_from_json(const nlohmann::json& j);

/// Writes scans_spinning/, scans_solid/, imu.csv, truth.tum, extrinsics.json
/// and manifest.json under `out_dir` (created if needed).
void export_dataset(const SimulationSetup& setup, const std::filesystem::path& out_dir);

}  // namespace gtforge::sim
