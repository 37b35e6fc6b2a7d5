#pragma once

#include <span>

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/scan_sequence.hpp"
#include "gtforge/registration/registration.hpp"

namespace gtforge {

struct OdometryParams {
  RegParams registration;
  double scan_leaf = 0.25;          // source downsampling, metres
  double map_leaf = 0.25;           // local map downsampling, metres
  double keyframe_distance = 0.5;   // metres moved before a scan joins the local map
  double keyframe_angle = 0.1745;   // radians (10 deg)
  int max_keyframes = 20;           // rolling window size

  void validate() const;
};

/// Scan-to-local-map GICP odometry. The first pose is the identity; each
/// later scan starts from a constant-velocity prediction. A scan whose
/// registration throws keeps the prediction and is flagged degraded, as is
/// one that fails to converge.
Trajectory incremental_odometry(const ScanSequence& scans, const OdometryParams& params);
Trajectory incremental_odometry(std::span<const PointCloud> scans, const OdometryParams& params);

}  // namespace gtforge
