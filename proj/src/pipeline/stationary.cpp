#include "gtforge/pipeline/stationary.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge {

void StationaryThresholds::validate() const {
  if (!(accel_dev_max > 0.0) || !(gyro_max > 0.0) || !(lin_vel_max > 0.0) ||
      !(min_duration > 0.0) || !(window > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "stationary thresholds must all be positive");
  }
}

namespace {

// Average odometry speed between the first and last pose inside [t0, t1].
// Returns a negative value when fewer than two poses fall inside.
double window_speed(const Trajectory& odom, double t0, double t1) {
  const auto& poses = odom.poses();
  const auto first = std::lower_bound(poses.begin(), poses.end(), t0,
                                      [](const Pose& p, double t) { return p.stamp() < t; });
  const auto last = std::upper_bound(poses.begin(), poses.end(), t1,
                                     [](double t, const Pose& p) { return t < p.stamp(); });
  if (last - first < 2) return -1.0;
  const Pose& a = *first;
  const Pose& b = *(last - 1);
  return (b.translation() - a.translation()).norm() / (b.stamp() - a.stamp());
}

}  // namespace

std::vector<Segment> detect_stationary_segments(const std::vector<ImuSample>& imu,
                                                const Trajectory* odom,
                                                const StationaryThresholds& th) {
  th.validate();
  if (imu.empty()) throw Error(ErrorCode::NoData, "stationary detection needs IMU samples");
  for (std::size_t i = 1; i < imu.size(); ++i) {
    if (!(imu[i].t > imu[i - 1].t)) {
      throw Error(ErrorCode::UnorderedTimestamps,
                  fmt::format("IMU sample {} at t={} does not follow t={}", i, imu[i].t, imu[i - 1].t));
    }
  }

  const std::size_t n = imu.size();
  // Relative slack so a window of exactly `window` seconds is recognised.
  const double span = th.window * (1.0 - 1e-9);
  std::vector<char> covered(n, 0);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j + 1 < n && imu[j + 1].t - imu[i].t <= th.window * (1.0 + 1e-9)) ++j;
    if (imu[j].t - imu[i].t < span) break;  // incomplete tail window

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t k = i; k <= j; ++k) mean += imu[k].accel;
    mean /= double(j - i + 1);
    bool still = true;
    for (std::size_t k = i; k <= j && still; ++k) {
      still = (imu[k].accel - mean).cwiseAbs().maxCoeff() < th.accel_dev_max &&
              imu[k].gyro.cwiseAbs().maxCoeff() < th.gyro_max;
    }
    if (still && odom != nullptr && !odom->empty()) {
      const double v = window_speed(*odom, imu[i].t, imu[j].t);
      still = v < 0.0 || v < th.lin_vel_max;
    }
    if (still) std::fill(covered.begin() + std::ptrdiff_t(i), covered.begin() + std::ptrdiff_t(j) + 1, 1);
  }

  std::vector<Segment> out;
  for (std::size_t i = 0; i < n;) {
    if (!covered[i]) {
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k + 1 < n && covered[k + 1]) ++k;
    const Segment s{imu[i].t, imu[k].t};
    if (s.duration() >= th.min_duration) out.push_back(s);
    i = k + 1;
  }
  return out;
}

}  // namespace gtforge
