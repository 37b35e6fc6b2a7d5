#include "gtforge/sim/lidar.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Rosette: z(tau) = (exp(i 2pi f1 tau) + exp(-i 2pi f2 tau)) / 2 with an
// irrational ratio f2/f1, mapped onto the field of view.
constexpr double kRosetteF1 = 17.0;
constexpr double kRosetteF2 = kRosetteF1 * std::numbers::phi;

Eigen::Vector3d direction(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

PointCloud cast(const Scene& scene, const Pose& pose, const SensorSpec& spec,
                const std::vector<Eigen::Vector3d>& dirs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spec.range_noise_sigma);
  const Eigen::Matrix3d R = pose.rotation_matrix();
  const Eigen::Vector3d origin = pose.translation();
  PointCloud cloud;
  cloud.stamp = pose.stamp();
  cloud.frame_id = spec.name;
  cloud.points.reserve(dirs.size());
  for (const auto& d : dirs) {
    const auto hit = scene.intersect(origin, R * d, spec.max_range);
    if (!hit) continue;
    const double r = spec.range_noise_sigma > 0.0 ? hit->range + noise(rng) : hit->range;
    cloud.points.push_back(r * d);
  }
  return cloud;
}

}  // namespace

std::string to_string(SensorKind kind) {
  return kind == SensorKind::Spinning ? "spinning" : "solid_state";
}

SensorKind sensor_kind_from_string(const std::string& name) {
  if (name == "spinning") return SensorKind::Spinning;
  if (name == "solid_state") return SensorKind::SolidState;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown sensor kind '{}'", name));
}

void SensorSpec::validate() const {
  const auto bad = [&](const char* what) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("sensor '{}': {}", name, what));
  };
  if (!(fov_h > 0.0 && fov_h <= 360.0) || !(fov_v > 0.0 && fov_v <= 180.0)) bad("fov out of range");
  if (!(max_range > 0.0) || !(rate > 0.0)) bad("max_range and rate must be positive");
  if (!(range_noise_sigma >= 0.0)) bad("range_noise_sigma must be non-negative");
  if (kind == SensorKind::Spinning) {
    if (channels < 1 || !(res_h > 0.0) || !(res_v > 0.0)) bad("channels and resolutions must be positive");
  } else if (!(points_per_second >= rate)) {
    bad("points_per_second must give at least one ray per frame");
  }
}

std::size_t SensorSpec::rays_per_frame() const {
  if (kind == SensorKind::Spinning) {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(std::lround(fov_h / res_h));
  }
  return static_cast<std::size_t>(std::llround(points_per_second / rate));
}

SensorSpec sensor_preset(const std::string& name) {
  SensorSpec s;
  s.name = name;
  if (name == "vlp16") {
    s.channels = 16, s.fov_v = 30.0, s.res_v = 2.0, s.res_h = 0.4;
    s.points_per_second = 300000, s.max_range = 100.0;
  } else if (name == "os1_64") {
    s.channels = 64, s.fov_v = 45.0, s.res_v = 0.7, s.res_h = 0.18;
    s.points_per_second = 1310720, s.max_range = 120.0;
  } else if (name == "os0_128") {
    s.channels = 128, s.fov_v = 90.0, s.res_v = 0.7, s.res_h = 0.18;
    s.points_per_second = 2621440, s.max_range = 50.0;
  } else if (name == "horizon") {
    s.kind = SensorKind::SolidState, s.channels = 1, s.fov_h = 81.7, s.fov_v = 25.1;
    s.points_per_second = 240000, s.max_range = 260.0;
  } else if (name == "avia") {
    s.kind = SensorKind::SolidState, s.channels = 1, s.fov_h = 70.4, s.fov_v = 77.2;
    s.points_per_second = 240000, s.max_range = 450.0;
  } else {
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown sensor preset '{}'", name));
  }
  return s;
}

std::vector<std::string> sensor_presets() { return {"vlp16", "os1_64", "os0_128", "horizon", "avia"}; }

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(frame),
                    static_cast<std::uint32_t>(frame >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Eigen::Vector3d> spinning_directions(const SensorSpec& spec) {
  const auto steps = static_cast<std::size_t>(std::lround(spec.fov_h / spec.res_h));
  // A full revolution starts at azimuth 0; a partial one is centred on x.
  const double az0 = spec.fov_h >= 360.0 ? 0.0 : -0.5 * spec.fov_h;
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(steps * static_cast<std::size_t>(spec.channels));
  for (std::size_t j = 0; j < steps; ++j) {
    const double az = (az0 + double(j) * spec.res_h) * kDeg;
    for (int c = 0; c < spec.channels; ++c) {
      const double el = (double(c) - 0.5 * (spec.channels - 1)) * spec.res_v * kDeg;
      dirs.push_back(direction(az, el));
    }
  }
  return dirs;
}

std::vector<Eigen::Vector3d> rosette_directions(const SensorSpec& spec, double frame_time) {
  const std::size_t n = spec.rays_per_frame();
  const double half_h = 0.5 * spec.fov_h * kDeg, half_v = 0.5 * spec.fov_v * kDeg;
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = frame_time + double(i) / spec.points_per_second;
    const double a = 2.0 * std::numbers::pi * kRosetteF1 * tau;
    const double b = 2.0 * std::numbers::pi * kRosetteF2 * tau;
    const double re = 0.5 * (std::cos(a) + std::cos(b));
    const double im = 0.5 * (std::sin(a) - std::sin(b));
    dirs.push_back(direction(re * half_h, im * half_v));
  }
  return dirs;
}

PointCloud simulate_spinning_scan(const Scene& scene, const Pose& pose, const SensorSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  if (spec.kind != SensorKind::Spinning) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("sensor '{}' is not spinning", spec.name));
  }
  return cast(scene, pose, spec, spinning_directions(spec), seed);
}

PointCloud simulate_solid_state_scan(const Scene& scene, const Pose& pose, const SensorSpec& spec,
                                     double frame_time, std::uint64_t seed) {
  spec.validate();
  if (spec.kind != SensorKind::SolidState) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("sensor '{}' is not solid state", spec.name));
  }
  return cast(scene, pose, spec, rosette_directions(spec, frame_time), seed);
}

}  // namespace gtforge::sim
