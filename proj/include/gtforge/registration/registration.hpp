#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

#include "gtforge/geom/kdtree.hpp"
#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/geom/pose.hpp"

namespace gtforge {

struct RegParams {
  double max_corr_dist = 1.0;
  int max_iterations = 50;
  double translation_eps = 1e-4;
  double rotation_eps = 1e-4;
  int k_neighbors = 20;
  double cov_epsilon = 1e-3;
  /// GICP only: drop a correspondence when the residual component lying in the
  /// target's local plane exceeds this (metres). Stops points that overhang
  /// the edge of a partial target from dragging the source along the plane.
  /// Zero disables the gate.
  double max_tangential_dist = 0.0;
  /// GICP only: translation directions whose eigenvalue in the translation
  /// block of the normal matrix is below this fraction of the largest are held
  /// at their initial value (e.g. sliding along a corridor or a lone wall).
  /// Zero disables.
  double degeneracy_ratio = 0.0;

  /// Throws InvalidArgument unless every field is positive (gate and ratio may be zero).
  void validate() const;
};

/// One accepted (or final rejected) Gauss-Newton step. Both costs are
/// evaluated with the correspondences and weights of that iteration.
struct IterationRecord {
  double cost_before = 0.0;
  double cost_after = 0.0;
  int halvings = 0;
  bool accepted = false;
};

struct RegResult {
  Pose pose;                 // target-from-source
  double fitness = 0.0;      // inlier fraction of the source, [0, 1]
  double inlier_rmse = 0.0;  // metres, nearest-neighbour distances of inliers
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

using Covariance = Eigen::Matrix3d;
using PointCovariances = std::vector<Covariance>;

/// Raw k-NN sample covariance (divisor k, neighbourhood includes the point
/// itself) for every point.
PointCovariances estimate_raw_covariances(const PointCloud& cloud, const KdTree& tree, int k);

/// Replaces the eigenvalues of `cov` by (epsilon, 1, 1) in its own eigenbasis,
/// smallest first.
Covariance regularize_plane(const Covariance& cov, double epsilon);

/// Plane-regularised covariances for GICP. Needs at least k+1 points.
PointCovariances estimate_covariances(const PointCloud& cloud, int k, double cov_epsilon);

/// Cloud with its search index and GICP covariances, reusable across calls.
struct PreparedCloud {
  PointCloud cloud;
  KdTree tree;
  PointCovariances covariances;
};

PreparedCloud prepare_cloud(const PointCloud& cloud, const RegParams& params);

/// Fitness and inlier RMSE of `source` under `pose` against `target`.
struct OverlapStats {
  double fitness = 0.0;
  double inlier_rmse = 0.0;
  std::size_t inliers = 0;
};
OverlapStats overlap_stats(const PointCloud& source, const KdTree& target, const Pose& pose,
                           double max_corr_dist);

/// Point-to-point ICP with a closed-form update each iteration.
RegResult icp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                    const RegParams& params);

/// Plane-to-plane generalized ICP, Gauss-Newton on SE(3) with step halving.
RegResult gicp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                     const RegParams& params);
RegResult gicp_align(const PreparedCloud& source, const PreparedCloud& target, const Pose& init,
                     const RegParams& params);

/// GICP objective sum d^T (C_t + R C_s R^T)^-1 d over nearest-neighbour
/// correspondences found at `pose`. Exposed for diagnostics and tests.
double gicp_cost(const PreparedCloud& source, const PreparedCloud& target, const Pose& pose,
                 double max_corr_dist);

}  // namespace gtforge
