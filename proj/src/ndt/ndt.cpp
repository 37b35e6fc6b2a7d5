#include "gtforge/ndt/ndt.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gtforge/error.hpp"

namespace gtforge {

void NdtParams::validate() const {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "NDT cell_size must be positive");
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "NDT outlier_ratio must lie in [0, 1)");
  }
  if (min_points_per_cell < 1 || max_iterations < 1 || !(translation_eps > 0.0) ||
      !(rotation_eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "NDT iteration parameters must be positive");
  }
}

const NdtCell* NdtGrid::find(const VoxelKey& key) const {
  const auto it = cells_.find(key);
  return it == cells_.end() ? nullptr : &it->second;
}

const NdtCell* NdtGrid::find(const Eigen::Vector3d& p) const { return find(key_of(p)); }

namespace {

constexpr double kEigenFloorRatio = 1e-3;
constexpr double kMinSpread = 1e-12;  // m^2; cells with no spread carry no shape

}  // namespace

Eigen::Vector3d centered_grid_origin(const PointCloud& map, double cell_size) {
  if (map.empty()) return Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = map.points.front();
  for (const auto& p : map.points) lo = lo.cwiseMin(p);
  return lo.array() - 0.5 * cell_size;
}

NdtGrid build_grid(const PointCloud& map, const NdtParams& params, const Eigen::Vector3d& origin) {
  params.validate();
  if (map.empty()) throw Error(ErrorCode::NoData, "cannot build an NDT grid from an empty map");

  NdtGrid grid(params.cell_size, origin);
  std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash> members;
  for (std::size_t i = 0; i < map.size(); ++i) members[grid.key_of(map.points[i])].push_back(i);

  for (const auto& [key, idx] : members) {
    if (idx.size() < static_cast<std::size_t>(std::max(params.min_points_per_cell, 2))) continue;
    NdtCell cell;
    cell.count = idx.size();
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i : idx) sum += map.points[i];
    cell.mean = sum / double(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i : idx) {
      const Eigen::Vector3d d = map.points[i] - cell.mean;
      cov += d * d.transpose();
    }
    cov /= double(idx.size() - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d values = es.eigenvalues();
    if (!(values(2) > kMinSpread)) continue;
    const double floor = kEigenFloorRatio * values(2);
    if (values(0) < floor) {
      values = values.cwiseMax(floor);
      cov = es.eigenvectors() * values.asDiagonal() * es.eigenvectors().transpose();
      cov = 0.5 * (cov + cov.transpose());
    }
    cell.covariance = cov;
    cell.inv_covariance = cov.inverse();
    grid.insert(key, cell);
  }
  return grid;
}

NdtScoreConstants ndt_score_constants(double cell_size, double outlier_ratio) {
  // Gaussian plus uniform outlier mixture, fitted by a scaled Gaussian.
  const double c1 = 10.0 * (1.0 - outlier_ratio);
  const double c2 = outlier_ratio / (cell_size * cell_size * cell_size);
  const double d3 = -std::log(c2);
  NdtScoreConstants k;
  k.d1 = -std::log(c1 + c2) - d3;
  k.d2 = -2.0 * std::log((-std::log(c1 * std::exp(-0.5) + c2) - d3) / k.d1);
  return k;
}

NdtScore score_pose(const NdtGrid& grid, const PointCloud& scan, const Pose& pose,
                    double outlier_ratio) {
  const NdtScoreConstants k = ndt_score_constants(grid.cell_size(), outlier_ratio);
  const Eigen::Matrix3d R = pose.rotation_matrix();
  NdtScore s;
  Eigen::Matrix<double, 3, 6> J;
  J.rightCols<3>().setIdentity();
  for (const auto& a : scan.points) {
    const Eigen::Vector3d p = R * a + pose.translation();
    const NdtCell* cell = grid.find(p);
    if (cell == nullptr) continue;
    ++s.points_in_cells;
    const Eigen::Vector3d x = p - cell->mean;
    const Eigen::Vector3d u = cell->inv_covariance * x;
    const double e = std::exp(-0.5 * k.d2 * x.dot(u));
    const double c = k.d1 * k.d2 * e;
    s.value += -k.d1 * e;

    J.leftCols<3>() = -R * skew(a);
    const Eigen::Matrix<double, 6, 1> uJ = J.transpose() * u;
    s.gradient += c * uJ;

    // u^T d2p/(dw_i dw_j) = (a_i w_j + a_j w_i)/2 - delta_ij (w.a), w = R^T u.
    const Eigen::Vector3d w = R.transpose() * u;
    Eigen::Matrix3d second = 0.5 * (a * w.transpose() + w * a.transpose());
    second.diagonal().array() -= w.dot(a);

    Eigen::Matrix<double, 6, 6> h = J.transpose() * cell->inv_covariance * J - k.d2 * uJ * uJ.transpose();
    h.topLeftCorner<3, 3>() += second;
    s.hessian += c * h;
  }
  return s;
}

namespace {

void ndt_fit_stats(const NdtGrid& grid, const PointCloud& scan, RegResult& r) {
  std::size_t inside = 0;
  double sq = 0.0;
  for (const auto& a : scan.points) {
    const Eigen::Vector3d p = r.pose * a;
    if (const NdtCell* cell = grid.find(p)) {
      ++inside;
      sq += (p - cell->mean).squaredNorm();
    }
  }
  r.fitness = scan.empty() ? 0.0 : double(inside) / double(scan.size());
  r.inlier_rmse = inside ? std::sqrt(sq / double(inside)) : 0.0;
}

constexpr int kMaxHalvings = 8;

}  // namespace

RegResult ndt_align(const NdtGrid& grid, const PointCloud& scan, const Pose& init,
                    const NdtParams& params) {
  params.validate();
  if (grid.empty() || scan.empty()) throw Error(ErrorCode::NoData, "NDT alignment needs a grid and a scan");

  RegResult result;
  Pose T = init;
  result.pose = T;
  NdtScore current = score_pose(grid, scan, T, params.outlier_ratio);
  if (current.points_in_cells == 0) {
    throw Error(ErrorCode::NoOverlap, "no scan point falls in a map cell at the initial pose");
  }

  using Matrix6 = Eigen::Matrix<double, 6, 6>;
  using Vector6 = Eigen::Matrix<double, 6, 1>;
  for (int it = 0; it < params.max_iterations; ++it) {
    // Newton on the negative score; shift until positive-definite.
    Matrix6 A = -current.hessian;
    const double scale = std::max(1e-12, A.diagonal().cwiseAbs().maxCoeff());
    double lambda = 0.0;
    Eigen::LLT<Matrix6> llt(A);
    while (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
      lambda = lambda == 0.0 ? 1e-6 * scale : lambda * 10.0;
      llt.compute(A + lambda * Matrix6::Identity());
    }
    const Vector6 delta = llt.solve(current.gradient);

    IterationRecord rec;
    rec.cost_before = -current.value;
    rec.cost_after = -current.value;
    Vector6 applied = Vector6::Zero();
    // Halve until the score does not drop, then keep halving while it still
    // rises: a full step can jump over a narrow peak into a neighbouring one.
    double step = 1.0;
    std::optional<NdtScore> best;
    Pose best_pose;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      const Pose candidate = retract(T, Vector6(step * delta));
      NdtScore trial = score_pose(grid, scan, candidate, params.outlier_ratio);
      if (best) {
        if (trial.value <= best->value) break;
      } else if (trial.value < current.value) {
        continue;
      }
      rec.halvings = h;
      applied = step * delta;
      best_pose = candidate;
      best = std::move(trial);
    }
    if (best) {
      rec.cost_after = -best->value;
      rec.accepted = true;
      T = best_pose;
      current = std::move(*best);
    }
    result.trace.push_back(rec);
    result.iterations = it + 1;
    result.pose = T;
    if (!rec.accepted || (applied.tail<3>().norm() < params.translation_eps &&
                          applied.head<3>().norm() < params.rotation_eps)) {
      result.converged = true;
      break;
    }
  }
  ndt_fit_stats(grid, scan, result);
  return result;
}

Trajectory track_sequence(const NdtGrid& grid, const ScanSequence& scans, const Pose& init,
                          const NdtParams& params, const Trajectory* motion_prior) {
  params.validate();
  if (motion_prior && motion_prior->empty()) motion_prior = nullptr;
  Trajectory traj;
  const double leaf = params.cell_size / 4.0;
  for (std::size_t k = 0; k < scans.size(); ++k) {
    const double stamp = scans.stamp(k);
    const PointCloud scan = voxel_downsample(scans.at(k), leaf);
    if (k == 0) {
      try {
        const RegResult r = ndt_align(grid, scan, init, params);
        traj.push_back(r.pose.with_stamp(stamp), !r.converged);
      } catch (const Error& e) {
        throw Error(ErrorCode::LocalizationLost,
                    fmt::format("first scan could not be localized: {}", e.what()));
      }
      continue;
    }
    Pose predicted = traj[k - 1];
    if (motion_prior) {
      // alignment noise is not fed back into the prediction
      const Pose& a = (*motion_prior)[motion_prior->nearest_index(scans.stamp(k - 1))];
      const Pose& b = (*motion_prior)[motion_prior->nearest_index(stamp)];
      predicted = traj[k - 1] * (a.inverse() * b);
    } else if (k >= 2) {
      predicted = traj[k - 1] * (traj[k - 2].inverse() * traj[k - 1]);
    }
    predicted = predicted.with_stamp(stamp);
    try {
      const RegResult r = ndt_align(grid, scan, predicted, params);
      traj.push_back(r.pose.with_stamp(stamp), !r.converged);
    } catch (const Error& e) {
      spdlog::warn("localization: scan {} at t={:.3f} kept the prediction ({})", k, stamp, e.what());
      traj.push_back(predicted, true);
    }
  }
  return traj;
}

Trajectory track_sequence(const NdtGrid& grid, std::span<const PointCloud> scans, const Pose& init,
                          const NdtParams& params, const Trajectory* motion_prior) {
  return track_sequence(grid, SpanScans(scans), init, params, motion_prior);
}

}  // namespace gtforge
