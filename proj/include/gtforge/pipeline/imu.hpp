#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace gtforge {

struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2, body frame, includes gravity
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s, body frame
};

/// CSV with header line, columns t,ax,ay,az,gx,gy,gz.
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);

}  // namespace gtforge
