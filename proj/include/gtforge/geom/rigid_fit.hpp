#pragma once

#include <span>

#include <Eigen/Core>

#include "gtforge/geom/pose.hpp"

namespace gtforge {

/// Closed-form rigid transform (no scale) minimising sum |dst_i - (R src_i + t)|^2,
/// with det(R) = +1.
///
/// Throws ErrorCode::DegenerateAlignment for fewer than 3 pairs or when the
/// centred source or destination set has rank < 2 (collinear or coincident),
/// judged by singular values relative to `rank_tolerance` times the largest.
Pose fit_rigid_transform(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst,
                         double rank_tolerance = 1e-10);

}  // namespace gtforge
