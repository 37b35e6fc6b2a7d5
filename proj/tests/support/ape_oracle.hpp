#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include <Eigen/SVD>

#include "gtforge/eval/ape.hpp"

namespace gtforge::testing {

/// Exhaustive greedy pairing: repeatedly take the globally smallest
/// (|dt|, est, ref) among unused poses. O(n^2) per pick.
inline Association brute_force_association(const Trajectory& est, const Trajectory& ref, double max_dt) {
  std::vector<bool> used_e(est.size()), used_r(ref.size());
  Association out;
  for (;;) {
    std::tuple<double, std::size_t, std::size_t> best{std::numeric_limits<double>::infinity(), 0, 0};
    for (std::size_t e = 0; e < est.size(); ++e) {
      if (used_e[e]) continue;
      for (std::size_t r = 0; r < ref.size(); ++r) {
        if (used_r[r]) continue;
        const double dt = std::abs(est[e].stamp() - ref[r].stamp());
        if (dt <= max_dt && std::make_tuple(dt, e, r) < best) best = {dt, e, r};
      }
    }
    if (std::isinf(std::get<0>(best))) break;
    used_e[std::get<1>(best)] = used_r[std::get<2>(best)] = true;
    out.emplace_back(std::get<1>(best), std::get<2>(best));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Textbook SVD alignment, independent of the library's fit.
inline Pose svd_alignment(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& ref) {
  Eigen::Vector3d me = Eigen::Vector3d::Zero(), mr = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= double(est.size());
  mr /= double(ref.size());
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) H += (ref[i] - mr) * (est[i] - me).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) D(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * D * svd.matrixV().transpose();
  return Pose(R, mr - R * me);
}

struct BruteApe {
  double mean = 0, std = 0, rmse = 0, median = 0, max = 0;
  std::vector<double> errors;
};

inline BruteApe brute_force_ape(const Trajectory& est, const Trajectory& ref, double max_dt, bool align) {
  const Association pairs = brute_force_association(est, ref, max_dt);
  Pose S;
  if (align) {
    std::vector<Eigen::Vector3d> pe, pr;
    for (const auto& [e, r] : pairs) {
      pe.push_back(est[e].translation());
      pr.push_back(ref[r].translation());
    }
    S = svd_alignment(pe, pr);
  }
  BruteApe b;
  for (const auto& [e, r] : pairs) b.errors.push_back((ref[r].translation() - (S * est[e]).translation()).norm());
  const double n = double(b.errors.size());
  for (double x : b.errors) {
    b.mean += x / n;
    b.rmse += x * x / n;
    b.max = std::max(b.max, x);
  }
  for (double x : b.errors) b.std += (x - b.mean) * (x - b.mean) / n;
  b.std = std::sqrt(b.std);
  b.rmse = std::sqrt(b.rmse);
  std::vector<double> sorted = b.errors;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  b.median = sorted.size() % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return b;
}

}  // namespace gtforge::testing
