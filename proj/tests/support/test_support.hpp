#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <Eigen/Geometry>

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/geom/pose.hpp"

namespace gtforge::testing {

constexpr double kDeg = M_PI / 180.0;

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Translation norm in [0, max_t], rotation angle in [0, max_angle] (radians).
inline Pose random_pose(std::mt19937_64& rng, double max_t, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Quaterniond q(Eigen::AngleAxisd(max_angle * u(rng), random_unit(rng)));
  return Pose(q, random_unit(rng) * (max_t * u(rng)));
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double half_extent) {
  std::uniform_real_distribution<double> u(-half_extent, half_extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

/// Random smooth-ish trajectory with stamps 0.1 s apart.
inline Trajectory random_trajectory(std::mt19937_64& rng, std::size_t n) {
  std::vector<Pose> poses;
  Pose p = random_pose(rng, 5.0, M_PI);
  for (std::size_t i = 0; i < n; ++i) {
    poses.push_back(p.with_stamp(0.1 * static_cast<double>(i)));
    p = p * random_pose(rng, 0.3, 0.1);
  }
  return Trajectory(std::move(poses));
}

/// Fresh per-process directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gtforge_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gtforge::testing
