#include "gtforge/registration/odometry.hpp"

#include <deque>

#include <spdlog/spdlog.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/filters.hpp"

namespace gtforge {

void OdometryParams::validate() const {
  registration.validate();
  if (!(scan_leaf > 0.0) || !(map_leaf > 0.0) || !(keyframe_distance > 0.0) ||
      !(keyframe_angle > 0.0) || max_keyframes < 1) {
    throw Error(ErrorCode::InvalidArgument, "odometry parameters must all be positive");
  }
}

namespace {

class LocalMap {
 public:
  explicit LocalMap(const OdometryParams& params) : params_(params) {}

  void add(const PointCloud& scan_in_map, const Pose& pose) {
    keyframes_.push_back(scan_in_map);
    last_keyframe_ = pose;
    while (keyframes_.size() > static_cast<std::size_t>(params_.max_keyframes)) keyframes_.pop_front();
    PointCloud merged;
    for (const auto& k : keyframes_) merged.append(k);
    target_ = prepare_cloud(voxel_downsample(merged, params_.map_leaf), params_.registration);
  }

  bool wants_keyframe(const Pose& pose) const {
    const PoseDistance d = pose_distance(last_keyframe_, pose);
    return d.translation > params_.keyframe_distance || d.rotation > params_.keyframe_angle;
  }

  const PreparedCloud& target() const { return target_; }

 private:
  const OdometryParams& params_;
  std::deque<PointCloud> keyframes_;
  Pose last_keyframe_;
  PreparedCloud target_;
};

}  // namespace

Trajectory incremental_odometry(const ScanSequence& scans, const OdometryParams& params) {
  params.validate();
  if (scans.empty()) throw Error(ErrorCode::NoData, "odometry needs at least one scan");

  Trajectory traj;
  traj.push_back(Pose::Identity().with_stamp(scans.stamp(0)));
  LocalMap map(params);
  map.add(voxel_downsample(scans.at(0), params.scan_leaf), traj.back());

  for (std::size_t k = 1; k < scans.size(); ++k) {
    const double stamp = scans.stamp(k);
    const Pose& prev = traj[k - 1];
    Pose predicted = prev;
    if (k >= 2) predicted = prev * (traj[k - 2].inverse() * prev);
    predicted = predicted.with_stamp(stamp);

    const PointCloud source = voxel_downsample(scans.at(k), params.scan_leaf);
    Pose estimate = predicted;
    bool degraded = false;
    try {
      const RegResult r = gicp_align(prepare_cloud(source, params.registration), map.target(),
                                     predicted, params.registration);
      estimate = r.pose.with_stamp(stamp);
      degraded = !r.converged;
    } catch (const Error& e) {
      spdlog::warn("odometry: scan {} at t={:.3f} kept the motion-model pose ({})", k, stamp,
                   e.what());
      degraded = true;
    }
    traj.push_back(estimate, degraded);
    if (!degraded && map.wants_keyframe(estimate)) map.add(transform_cloud(source, estimate), estimate);
  }
  return traj;
}

Trajectory incremental_odometry(std::span<const PointCloud> scans, const OdometryParams& params) {
  return incremental_odometry(SpanScans(scans), params);
}

}  // namespace gtforge
