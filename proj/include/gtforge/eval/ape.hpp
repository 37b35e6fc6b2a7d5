#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "gtforge/eval/trajectory.hpp"

namespace gtforge {

/// (est index, ref index) pairs, sorted by est index.
using Association = std::vector<std::pair<std::size_t, std::size_t>>;

/// One-to-one pairing: candidate pairs with |dt| <= max_dt are taken greedily
/// by smallest |dt| (ties by est index, then ref index). Throws NoAssociation
/// when nothing pairs up.
Association associate_timestamps(const Trajectory& est, const Trajectory& ref, double max_dt);

/// Body-frame change: P' = X * P * X^-1 for every pose.
Trajectory apply_reference_transform(const Trajectory& traj, const Pose& extrinsic);

/// Rigid transform S minimising sum |ref_i - S(est_i)|^2. Throws
/// DegenerateAlignment for < 3 pairs or collinear input.
Pose umeyama_alignment(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& ref);

enum class Alignment { None, Umeyama };
std::string to_string(Alignment a);
Alignment alignment_from_string(const std::string& s);  // "none" | "umeyama"

struct ApeOptions {
  Alignment align = Alignment::None;
  double max_dt = 0.02;
  bool rotation = false;  // also report rotational error (radians)
};

struct PoseError {
  double t = 0.0;  // est stamp
  double translation = 0.0;
  double rotation = 0.0;  // only filled when ApeOptions::rotation
};

struct ApeStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double rmse = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::vector<PoseError> per_pose;
  Pose alignment;  // identity unless aligned
  std::optional<double> rotation_mean;
  std::optional<double> rotation_rmse;
  std::optional<double> rotation_max;
};

ApeStats compute_ape(const Trajectory& est, const Trajectory& ref, const ApeOptions& opts = {});

struct AxisDeviation {
  Eigen::Vector3d std = Eigen::Vector3d::Zero();
  double overall = 0.0;  // sqrt of the summed per-axis variances
};

/// Population std of the translations with stamps in [t0, t1]. Throws
/// InsufficientData with fewer than 2 poses in the window.
AxisDeviation stationary_deviation(const Trajectory& gt, double t0, double t1);

nlohmann::json to_json(const ApeStats& s, const ApeOptions& opts);
nlohmann::json to_json(const AxisDeviation& d);
void write_ape_csv(const std::filesystem::path& path, const ApeStats& s, bool rotation);

}  // namespace gtforge
