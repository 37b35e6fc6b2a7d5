#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>

#include <Eigen/Core>

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/filters.hpp"
#include "gtforge/geom/scan_sequence.hpp"
#include "gtforge/registration/registration.hpp"

namespace gtforge {

struct NdtParams {
  double cell_size = 1.0;
  int min_points_per_cell = 6;
  double outlier_ratio = 0.55;
  int max_iterations = 100;  // cold starts climb slowly while the Hessian is indefinite
  double translation_eps = 1e-4;
  double rotation_eps = 1e-4;

  void validate() const;
};

struct NdtCell {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d inv_covariance = Eigen::Matrix3d::Identity();
  std::uint64_t count = 0;
};

/// Sparse grid of per-voxel Gaussians. Immutable once built.
class NdtGrid {
 public:
  NdtGrid() = default;
  NdtGrid(double cell_size, const Eigen::Vector3d& origin) : cell_size_(cell_size), origin_(origin) {}

  double cell_size() const { return cell_size_; }
  const Eigen::Vector3d& origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  VoxelKey key_of(const Eigen::Vector3d& p) const { return voxel_key(p, cell_size_, origin_); }
  const NdtCell* find(const Eigen::Vector3d& p) const;
  const NdtCell* find(const VoxelKey& key) const;

  const std::unordered_map<VoxelKey, NdtCell, VoxelKeyHash>& cells() const { return cells_; }
  void insert(const VoxelKey& key, const NdtCell& cell) { cells_[key] = cell; }

 private:
  double cell_size_ = 1.0;
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  std::unordered_map<VoxelKey, NdtCell, VoxelKeyHash> cells_;
};

/// Per-voxel mean and sample covariance (divisor n-1), members summed in
/// index order. Cells with fewer than min_points_per_cell points, or with no
/// spread at all, are dropped. Eigenvalues below 1e-3 of the largest are
/// raised to that floor; otherwise the covariance is stored as computed.
NdtGrid build_grid(const PointCloud& map, const NdtParams& params,
                   const Eigen::Vector3d& origin = Eigen::Vector3d::Zero());

/// Half a cell below the map's lower bound. Planar boundaries of the map
/// (floors, outer walls) then fall mid-cell instead of splitting across two.
Eigen::Vector3d centered_grid_origin(const PointCloud& map, double cell_size);

/// Mixture constants of the per-point score -d1 * exp(-d2/2 * x^T S^-1 x).
struct NdtScoreConstants {
  double d1 = 0.0;
  double d2 = 0.0;
};
NdtScoreConstants ndt_score_constants(double cell_size, double outlier_ratio);

struct NdtScore {
  double value = 0.0;
  Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> hessian = Eigen::Matrix<double, 6, 6>::Zero();
  std::size_t points_in_cells = 0;
};

/// Score of `scan` under `pose` with derivatives w.r.t. the right
/// perturbation (rotation first, then translation) used by `retract`.
NdtScore score_pose(const NdtGrid& grid, const PointCloud& scan, const Pose& pose,
                    double outlier_ratio);

/// Newton alignment maximising the score. The scan is used as given.
RegResult ndt_align(const NdtGrid& grid, const PointCloud& scan, const Pose& init,
                    const NdtParams& params);

/// Aligns each scan (voxel-downsampled to cell_size/4) in order. Scan 0
/// starts at `init`, later scans at a constant-velocity prediction, or, when
/// `motion_prior` is given, at the previous pose moved by the prior's
/// increment between the two scan stamps (nearest prior poses).
/// Throws LocalizationLost if the first scan cannot be aligned; later
/// failures keep the prediction and are flagged degraded.
Trajectory track_sequence(const NdtGrid& grid, const ScanSequence& scans, const Pose& init,
                          const NdtParams& params, const Trajectory* motion_prior = nullptr);
Trajectory track_sequence(const NdtGrid& grid, std::span<const PointCloud> scans, const Pose& init,
                          const NdtParams& params, const Trajectory* motion_prior = nullptr);

/// Versioned binary cache; round-trips bit-exactly.
void write_grid(const std::filesystem::path& path, const NdtGrid& grid);
NdtGrid read_grid(const std::filesystem::path& path);

}  // namespace gtforge
