#pragma once

#include <random>

#include "gtforge/ndt/ndt.hpp"
#include "test_support.hpp"

namespace gtforge::testing {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

inline Vector6 unit6(int i) {
  Vector6 e = Vector6::Zero();
  e(i) = 1.0;
  return e;
}

inline double score_at(const NdtGrid& g, const PointCloud& scan, const Pose& T, double ratio,
                       const Vector6& delta) {
  return score_pose(g, scan, retract(T, delta), ratio).value;
}

/// Central differences of the score along the retract perturbation.
inline Vector6 fd_gradient(const NdtGrid& g, const PointCloud& scan, const Pose& T, double ratio, double h = 1e-6) {
  Vector6 out;
  for (int i = 0; i < 6; ++i) {
    out(i) = (score_at(g, scan, T, ratio, h * unit6(i)) - score_at(g, scan, T, ratio, -h * unit6(i))) / (2.0 * h);
  }
  return out;
}

/// Second differences of the score itself (not of the gradient, whose
/// tangent frame moves with the pose).
inline Matrix6 fd_hessian(const NdtGrid& g, const PointCloud& scan, const Pose& T, double ratio, double h = 1e-4) {
  Matrix6 out;
  const double f0 = score_at(g, scan, T, ratio, Vector6::Zero());
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      if (i == j) {
        out(i, i) = (score_at(g, scan, T, ratio, h * unit6(i)) - 2.0 * f0 + score_at(g, scan, T, ratio, -h * unit6(i))) /
                    (h * h);
      } else {
        const Vector6 a = h * unit6(i), b = h * unit6(j);
        out(i, j) = (score_at(g, scan, T, ratio, a + b) - score_at(g, scan, T, ratio, a - b) -
                     score_at(g, scan, T, ratio, b - a) + score_at(g, scan, T, ratio, -a - b)) /
                    (4.0 * h * h);
        out(j, i) = out(i, j);
      }
    }
  }
  return out;
}

struct NdtInstance {
  NdtGrid grid;
  PointCloud scan;
  Pose pose;
};

/// Anisotropic Gaussian blobs, one per cell, and a scan of points drawn near
/// them, seen from a small random pose.
inline NdtInstance random_ndt_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.25, 0.75);
  PointCloud map, scan;
  for (int cx = 0; cx < 3; ++cx) {
    for (int cy = 0; cy < 3; ++cy) {
      const Eigen::Vector3d c(cx + u(rng), cy + u(rng), u(rng));
      const Eigen::Vector3d s(0.05 + 0.1 * u(rng), 0.05 + 0.1 * u(rng), 0.02 + 0.05 * u(rng));
      for (int k = 0; k < 40; ++k) {
        Eigen::Vector3d p = c + Eigen::Vector3d(s.x() * n(rng), s.y() * n(rng), s.z() * n(rng));
        map.points.push_back(p.cwiseMax(Eigen::Vector3d(cx + 0.01, cy + 0.01, 0.01))
                                 .cwiseMin(Eigen::Vector3d(cx + 0.99, cy + 0.99, 0.99)));
      }
      for (int k = 0; k < 15; ++k) {
        const Eigen::Vector3d p = c + Eigen::Vector3d(1.5 * s.x() * n(rng), 1.5 * s.y() * n(rng), 1.5 * s.z() * n(rng));
        // the score jumps when a point changes cell; keep differences away from that
        const Eigen::Vector3d frac = p - p.array().floor().matrix();
        if ((frac.array() > 0.005).all() && (frac.array() < 0.995).all()) scan.points.push_back(p);
      }
    }
  }
  NdtParams params;
  NdtInstance inst;
  inst.grid = build_grid(map, params);
  inst.pose = random_pose(rng, 0.05, 0.02);
  inst.scan = transform_cloud(scan, inst.pose.inverse());
  return inst;
}

inline double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& ref) {
  return (got - ref).norm() / std::max(ref.norm(), 1e-300);
}

}  // namespace gtforge::testing
