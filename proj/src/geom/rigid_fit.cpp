#include "gtforge/geom/rigid_fit.hpp"

#include <Eigen/SVD>

#include "gtforge/error.hpp"

namespace gtforge {

namespace {

bool rank_below_two(std::span<const Eigen::Vector3d> pts, const Eigen::Vector3d& mean, double tol) {
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) scatter += (p - mean) * (p - mean).transpose();
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(scatter).singularValues();
  return sv(0) <= 0.0 || sv(1) < tol * sv(0);
}

}  // namespace

Pose fit_rigid_transform(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst,
                         double rank_tolerance) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::InvalidArgument, "rigid fit needs paired point sets of equal size");
  }
  if (src.size() < 3) throw Error(ErrorCode::DegenerateAlignment, "rigid fit needs >= 3 pairs");

  Eigen::Vector3d mu_src = Eigen::Vector3d::Zero(), mu_dst = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= double(src.size());
  mu_dst /= double(dst.size());

  if (rank_below_two(src, mu_src, rank_tolerance) || rank_below_two(dst, mu_dst, rank_tolerance)) {
    throw Error(ErrorCode::DegenerateAlignment, "point sets are collinear or coincident");
  }

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cross += (dst[i] - mu_dst) * (src[i] - mu_src).transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * S * svd.matrixV().transpose();
  return Pose(R, mu_dst - R * mu_src);
}

}  // namespace gtforge
