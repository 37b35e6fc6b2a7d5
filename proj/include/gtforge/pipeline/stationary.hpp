#pragma once

#include <vector>

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/pipeline/imu.hpp"

namespace gtforge {

struct StationaryThresholds {
  double accel_dev_max = 0.01;  // m/s^2, per axis, from the window mean
  double gyro_max = 0.01;       // rad/s, per axis
  double lin_vel_max = 0.01;    // m/s, from odometry
  double min_duration = 1.0;    // s
  double window = 0.5;          // s, sliding at IMU rate

  void validate() const;
};

struct Segment {
  double start = 0.0;
  double end = 0.0;
  double duration() const { return end - start; }
};

/// Maximal stationary intervals. A window [t_i, t_i + window] of IMU samples is
/// stationary when every axis stays within accel_dev_max of the window mean,
/// every gyro axis stays below gyro_max and, if `odom` is given, the odometry
/// displacement across the window is slower than lin_vel_max. Segments are
/// unions of overlapping stationary windows, bounded by sample times; those
/// shorter than min_duration are dropped.
///
/// Throws NoData for an empty stream and UnorderedTimestamps if the IMU
/// stamps do not strictly increase.
std::vector<Segment> detect_stationary_segments(const std::vector<ImuSample>& imu,
                                                const Trajectory* odom,
                                                const StationaryThresholds& th);

}  // namespace gtforge
