#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gtforge/geom/pose.hpp"
#include "gtforge/pipeline/imu.hpp"

namespace gtforge::sim {

struct Waypoint {
  double t = 0.0;
  Pose pose;
};

struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
};

/// Piecewise-constant-velocity motion: translation is linear and rotation is
/// slerped between consecutive waypoints. Consecutive identical waypoints are
/// stops. Outside [start, end] the pose is held.
class MotionScript {
 public:
  MotionScript() = default;
  /// Throws InvalidArgument unless timestamps strictly increase.
  explicit MotionScript(std::vector<Waypoint> waypoints);

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  double start_time() const { return waypoints_.front().t; }
  double end_time() const { return waypoints_.back().t; }
  double duration() const { return end_time() - start_time(); }

  Pose pose_at(double t) const;
  /// World-frame velocity of the segment containing t (right-continuous).
  Eigen::Vector3d linear_velocity(double t) const;
  /// Maximal windows in which the pose does not change.
  std::vector<TimeWindow> stop_windows() const;

  /// Builder: starts at `start` at t = 0 and appends segments.
  class Builder {
   public:
    explicit Builder(const Pose& start = Pose::Identity());
    Builder& hold(double duration);
    Builder& move_to(const Pose& target, double duration);
    /// Moves by a body-frame translation and a yaw change.
    Builder& move_by(const Eigen::Vector3d& body_translation, double yaw, double duration);
    MotionScript build() const;

   private:
    std::vector<Waypoint> waypoints_;
  };

 private:
  std::size_t segment(double t) const;
  std::vector<Waypoint> waypoints_;
};

constexpr double kGravity = 9.81;

/// Body-frame specific force and angular rate sampled at `rate` from the
/// script start to its end. Derivatives are central differences over one
/// sample period; noise is Gaussian, seeded.
std::vector<ImuSample> synthesize_imu(const MotionScript& script, double rate, double noise_accel,
                                      double noise_gyro, std::uint64_t seed);

}  // namespace gtforge::sim
