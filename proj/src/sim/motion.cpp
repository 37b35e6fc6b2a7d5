#include "gtforge/sim/motion.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/sim/lidar.hpp"

namespace gtforge::sim {

namespace {

bool same_pose(const Pose& a, const Pose& b) {
  return a.translation() == b.translation() && a.rotation().coeffs() == b.rotation().coeffs();
}

constexpr std::uint64_t kImuStream = 3;

}  // namespace

MotionScript::MotionScript(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {
  if (waypoints_.empty()) throw Error(ErrorCode::InvalidArgument, "a motion script needs a waypoint");
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    if (!(waypoints_[i].t > waypoints_[i - 1].t)) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("waypoint {} at t={} does not follow t={}", i, waypoints_[i].t,
                              waypoints_[i - 1].t));
    }
  }
}

std::size_t MotionScript::segment(double t) const {
  // Index i of the segment [t_i, t_{i+1}) containing t.
  const auto it = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.t; });
  const auto i = static_cast<std::size_t>(std::distance(waypoints_.begin(), it));
  return i == 0 ? 0 : i - 1;
}

Pose MotionScript::pose_at(double t) const {
  if (t <= start_time()) return waypoints_.front().pose.with_stamp(t);
  if (t >= end_time()) return waypoints_.back().pose.with_stamp(t);
  const std::size_t i = segment(t);
  const Waypoint& a = waypoints_[i];
  const Waypoint& b = waypoints_[i + 1];
  if (same_pose(a.pose, b.pose)) return a.pose.with_stamp(t);
  const double s = (t - a.t) / (b.t - a.t);
  return Pose(a.pose.rotation().slerp(s, b.pose.rotation()),
              (1.0 - s) * a.pose.translation() + s * b.pose.translation(), t);
}

Eigen::Vector3d MotionScript::linear_velocity(double t) const {
  if (t < start_time() || t >= end_time()) return Eigen::Vector3d::Zero();
  const std::size_t i = segment(t);
  const Waypoint& a = waypoints_[i];
  const Waypoint& b = waypoints_[i + 1];
  return (b.pose.translation() - a.pose.translation()) / (b.t - a.t);
}

std::vector<TimeWindow> MotionScript::stop_windows() const {
  std::vector<TimeWindow> out;
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    if (!same_pose(waypoints_[i].pose, waypoints_[i + 1].pose)) continue;
    if (!out.empty() && out.back().end == waypoints_[i].t) {
      out.back().end = waypoints_[i + 1].t;
    } else {
      out.push_back({waypoints_[i].t, waypoints_[i + 1].t});
    }
  }
  return out;
}

MotionScript::Builder::Builder(const Pose& start) { waypoints_.push_back({0.0, start.with_stamp(0.0)}); }

MotionScript::Builder& MotionScript::Builder::hold(double duration) {
  return move_to(waypoints_.back().pose, duration);
}

MotionScript::Builder& MotionScript::Builder::move_to(const Pose& target, double duration) {
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "segment duration must be positive");
  const double t = waypoints_.back().t + duration;
  waypoints_.push_back({t, target.with_stamp(t)});
  return *this;
}

MotionScript::Builder& MotionScript::Builder::move_by(const Eigen::Vector3d& body_translation,
                                                      double yaw, double duration) {
  const Pose& from = waypoints_.back().pose;
  const Pose delta(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())),
                   body_translation);
  return move_to(from * delta, duration);
}

MotionScript MotionScript::Builder::build() const { return MotionScript(waypoints_); }

std::vector<ImuSample> synthesize_imu(const MotionScript& script, double rate, double noise_accel,
                                      double noise_gyro, std::uint64_t seed) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "IMU rate must be positive");
  if (!(noise_accel >= 0.0) || !(noise_gyro >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "IMU noise must be non-negative");
  }
  std::mt19937_64 rng = make_rng(seed, kImuStream, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double dt = 1.0 / rate;
  const auto count = static_cast<std::size_t>(std::floor(script.duration() * rate + 1e-9)) + 1;
  const Eigen::Vector3d g(0.0, 0.0, kGravity);

  std::vector<ImuSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ImuSample s;
    s.t = script.start_time() + double(k) / rate;
    const Pose before = script.pose_at(s.t - 0.5 * dt);
    const Pose after = script.pose_at(s.t + 0.5 * dt);
    const Eigen::Vector3d a_world =
        (script.linear_velocity(s.t + 0.5 * dt) - script.linear_velocity(s.t - 0.5 * dt)) / dt;
    const Eigen::Matrix3d R = script.pose_at(s.t).rotation_matrix();
    s.accel = R.transpose() * (a_world + g);
    s.gyro = so3_log(Eigen::Quaterniond(before.rotation().conjugate() * after.rotation())) / dt;
    for (int i = 0; i < 3; ++i) {
      const double na = unit(rng), ng = unit(rng);
      s.accel[i] += noise_accel * na;
      s.gyro[i] += noise_gyro * ng;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace gtforge::sim
