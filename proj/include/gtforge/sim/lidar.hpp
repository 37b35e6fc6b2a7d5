#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/geom/pose.hpp"
#include "gtforge/sim/scene.hpp"

namespace gtforge::sim {

enum class SensorKind { Spinning, SolidState };

std::string to_string(SensorKind kind);
SensorKind sensor_kind_from_string(const std::string& name);

/// Angles in degrees, ranges in metres. `channels`, `res_h` and `res_v` only
/// apply to spinning sensors.
struct SensorSpec {
  std::string name;
  SensorKind kind = SensorKind::Spinning;
  int channels = 16;
  double fov_h = 360.0;
  double fov_v = 30.0;
  double res_h = 0.4;
  double res_v = 2.0;
  double points_per_second = 300000.0;
  double max_range = 100.0;
  double range_noise_sigma = 0.02;
  double rate = 10.0;

  void validate() const;
  /// Azimuth steps per revolution (spinning) or rays per frame (solid state).
  std::size_t rays_per_frame() const;
};

/// vlp16, os1_64, os0_128, horizon, avia.
SensorSpec sensor_preset(const std::string& name);
std::vector<std::string> sensor_presets();

/// Independent, reproducible stream for (seed, stream, frame).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame);

/// Ray directions in the sensor frame (x forward, z up).
std::vector<Eigen::Vector3d> spinning_directions(const SensorSpec& spec);
/// Rosette directions for the frame starting at `frame_time`; the pattern
/// phase is the absolute time, so successive frames never repeat rays.
std::vector<Eigen::Vector3d> rosette_directions(const SensorSpec& spec, double frame_time);

/// Points are in the sensor frame; `pose` is world-from-sensor. Rays without
/// a hit inside max_range are omitted. The cloud stamp is pose.stamp().
PointCloud simulate_spinning_scan(const Scene& scene, const Pose& pose, const SensorSpec& spec,
                                  std::uint64_t seed);
PointCloud simulate_solid_state_scan(const Scene& scene, const Pose& pose, const SensorSpec& spec,
                                     double frame_time, std::uint64_t seed);

}  // namespace gtforge::sim
