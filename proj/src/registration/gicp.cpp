#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/rigid_fit.hpp"
#include "gtforge/registration/registration.hpp"

namespace gtforge {

void RegParams::validate() const {
  if (!(max_corr_dist > 0.0) || max_iterations < 1 || !(translation_eps > 0.0) ||
      !(rotation_eps > 0.0) || k_neighbors < 1 || !(cov_epsilon > 0.0 && cov_epsilon < 1.0) ||
      !(max_tangential_dist >= 0.0) || !(degeneracy_ratio >= 0.0 && degeneracy_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "registration parameters must all be positive");
  }
}

PointCovariances estimate_raw_covariances(const PointCloud& cloud, const KdTree& tree, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "covariance estimation requires k >= 1");
  if (cloud.size() < static_cast<std::size_t>(k) + 1) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("covariance estimation needs {} points, cloud has {}", k + 1, cloud.size()));
  }
  PointCovariances covs(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], static_cast<std::size_t>(k));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& n : nn) mean += tree.point(n.index);
    mean /= double(nn.size());
    Covariance c = Covariance::Zero();
    for (const auto& n : nn) {
      const Eigen::Vector3d d = tree.point(n.index) - mean;
      c += d * d.transpose();
    }
    covs[i] = c / double(nn.size());
  }
  return covs;
}

Covariance regularize_plane(const Covariance& cov, double epsilon) {
  const Eigen::SelfAdjointEigenSolver<Covariance> es(cov);
  const Eigen::Matrix3d& U = es.eigenvectors();  // columns, ascending eigenvalues
  const Eigen::Vector3d values(epsilon, 1.0, 1.0);
  Covariance out = U * values.asDiagonal() * U.transpose();
  return 0.5 * (out + out.transpose());
}

PointCovariances estimate_covariances(const PointCloud& cloud, int k, double cov_epsilon) {
  const KdTree tree(cloud);
  PointCovariances covs = estimate_raw_covariances(cloud, tree, k);
  for (auto& c : covs) c = regularize_plane(c, cov_epsilon);
  return covs;
}

PreparedCloud prepare_cloud(const PointCloud& cloud, const RegParams& params) {
  params.validate();
  PreparedCloud p{cloud, KdTree(cloud), {}};
  p.covariances = estimate_raw_covariances(p.cloud, p.tree, params.k_neighbors);
  for (auto& c : p.covariances) c = regularize_plane(c, params.cov_epsilon);
  return p;
}

OverlapStats overlap_stats(const PointCloud& source, const KdTree& target, const Pose& pose,
                           double max_corr_dist) {
  OverlapStats s;
  if (source.empty() || target.empty()) return s;
  double sq = 0.0;
  for (const auto& a : source.points) {
    const auto nn = target.nearest(pose * a, max_corr_dist);
    if (!nn) continue;
    sq += nn->distance * nn->distance;
    ++s.inliers;
  }
  s.fitness = double(s.inliers) / double(source.size());
  s.inlier_rmse = s.inliers ? std::sqrt(sq / double(s.inliers)) : 0.0;
  return s;
}

namespace {

void finish(RegResult& r, const PointCloud& source, const KdTree& target, double max_corr) {
  const OverlapStats s = overlap_stats(source, target, r.pose, max_corr);
  r.fitness = s.fitness;
  r.inlier_rmse = s.inlier_rmse;
}

bool small_step(const Eigen::Vector3d& dtheta, const Eigen::Vector3d& dt, const RegParams& p) {
  return dt.norm() < p.translation_eps && dtheta.norm() < p.rotation_eps;
}

struct Correspondence {
  std::size_t source;
  std::size_t target;
};

std::vector<Correspondence> find_correspondences(const PointCloud& source, const KdTree& target,
                                                 const Pose& pose, double max_corr) {
  std::vector<Correspondence> out;
  out.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (const auto nn = target.nearest(pose * source.points[i], max_corr)) {
      out.push_back({i, nn->index});
    }
  }
  return out;
}

// A plane-regularised covariance is eps*n*n^T + (I - n*n^T), so the in-plane
// projector is (C - eps*I) / (1 - eps).
void gate_tangential(std::vector<Correspondence>& corr, const PreparedCloud& source,
                     const PreparedCloud& target, const Pose& pose, const RegParams& params) {
  if (params.max_tangential_dist <= 0.0) return;
  const double limit_sq = params.max_tangential_dist * params.max_tangential_dist;
  const double eps = params.cov_epsilon;
  std::size_t out = 0;
  for (const auto& c : corr) {
    const Eigen::Vector3d r = target.cloud.points[c.target] - pose * source.cloud.points[c.source];
    const Eigen::Matrix3d P =
        (target.covariances[c.target] - eps * Eigen::Matrix3d::Identity()) / (1.0 - eps);
    if ((P * r).squaredNorm() <= limit_sq) corr[out++] = c;
  }
  corr.resize(out);
}

using Weights = std::vector<Eigen::Matrix3d>;

Weights gicp_weights(const PreparedCloud& source, const PreparedCloud& target,
                     const std::vector<Correspondence>& corr, const Eigen::Matrix3d& R) {
  Weights w(corr.size());
  for (std::size_t c = 0; c < corr.size(); ++c) {
    const Eigen::Matrix3d combined = target.covariances[corr[c].target] +
                                     R * source.covariances[corr[c].source] * R.transpose();
    w[c] = combined.inverse();
  }
  return w;
}

double frozen_cost(const PreparedCloud& source, const PreparedCloud& target,
                   const std::vector<Correspondence>& corr, const Weights& w, const Pose& pose) {
  double cost = 0.0;
  for (std::size_t c = 0; c < corr.size(); ++c) {
    const Eigen::Vector3d r =
        target.cloud.points[corr[c].target] - pose * source.cloud.points[corr[c].source];
    cost += r.dot(w[c] * r);
  }
  return cost;
}

constexpr int kMaxHalvings = 8;

// Gauss-Newton step in which translation along weakly observed directions
// (eigenvalue of the translation block below ratio * largest) is held fixed.
// Rotation is always solved for.
Eigen::Matrix<double, 6, 1> remapped_step(const Eigen::Matrix<double, 6, 6>& H,
                                          const Eigen::Matrix<double, 6, 1>& g, double ratio) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H.bottomRightCorner<3, 3>());
  const double floor = ratio * es.eigenvalues()(2);
  int keep = 0;
  Eigen::Matrix<double, 6, 6> B = Eigen::Matrix<double, 6, 6>::Zero();
  B.topLeftCorner<3, 3>().setIdentity();
  for (int i = 2; i >= 0; --i) {
    if (es.eigenvalues()(i) < floor) break;
    B.block<3, 1>(3, 3 + keep++) = es.eigenvectors().col(i);
  }
  const Eigen::MatrixXd Bk = B.leftCols(3 + keep);
  const Eigen::MatrixXd Hr = Bk.transpose() * H * Bk;
  const Eigen::VectorXd x = Hr.ldlt().solve(-(Bk.transpose() * g));
  return Bk * x;
}

}  // namespace

double gicp_cost(const PreparedCloud& source, const PreparedCloud& target, const Pose& pose,
                 double max_corr_dist) {
  const auto corr = find_correspondences(source.cloud, target.tree, pose, max_corr_dist);
  const Weights w = gicp_weights(source, target, corr, pose.rotation_matrix());
  return frozen_cost(source, target, corr, w, pose);
}

RegResult gicp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                     const RegParams& params) {
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::NoData, "gicp_align requires non-empty clouds");
  }
  return gicp_align(prepare_cloud(source, params), prepare_cloud(target, params), init, params);
}

RegResult gicp_align(const PreparedCloud& source, const PreparedCloud& target, const Pose& init,
                     const RegParams& params) {
  params.validate();
  if (source.cloud.empty() || target.cloud.empty()) {
    throw Error(ErrorCode::NoData, "gicp_align requires non-empty clouds");
  }
  RegResult result;
  result.pose = init;
  Pose T = init;

  for (int it = 0; it < params.max_iterations; ++it) {
    auto corr = find_correspondences(source.cloud, target.tree, T, params.max_corr_dist);
    gate_tangential(corr, source, target, T, params);
    if (corr.empty()) {
      if (it == 0) {
        throw Error(ErrorCode::NoOverlap, "no correspondences within max_corr_dist at initial pose");
      }
      break;
    }
    const Eigen::Matrix3d R = T.rotation_matrix();
    const Weights w = gicp_weights(source, target, corr, R);

    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    double cost0 = 0.0;
    for (std::size_t c = 0; c < corr.size(); ++c) {
      const Eigen::Vector3d& a = source.cloud.points[corr[c].source];
      const Eigen::Vector3d r = target.cloud.points[corr[c].target] - (R * a + T.translation());
      Eigen::Matrix<double, 3, 6> J;
      J.leftCols<3>() = R * skew(a);
      J.rightCols<3>() = -Eigen::Matrix3d::Identity();
      const Eigen::Matrix<double, 6, 3> JtW = J.transpose() * w[c];
      H.noalias() += JtW * J;
      g.noalias() += JtW * r;
      cost0 += r.dot(w[c] * r);
    }

    // Translation is unobservable when no direction is constrained by more
    // than the plane-regularisation floor (e.g. a single plane).
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> trans_es(H.bottomRightCorner<3, 3>());
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> full_es(H);
    const double t_min = trans_es.eigenvalues()(0), t_max = trans_es.eigenvalues()(2);
    const double f_min = full_es.eigenvalues()(0), f_max = full_es.eigenvalues()(5);
    if (!(t_max > 0.0) || t_min < 2.0 * params.cov_epsilon * t_max || !(f_min > 1e-12 * f_max)) {
      throw Error(ErrorCode::SingularSystem,
                  fmt::format("GICP normal matrix is rank-deficient (translation eigenvalue ratio {:.3g})",
                              t_max > 0.0 ? t_min / t_max : 0.0));
    }

    const Eigen::Matrix<double, 6, 1> delta =
        params.degeneracy_ratio > 0.0 ? remapped_step(H, g, params.degeneracy_ratio)
                                      : Eigen::Matrix<double, 6, 1>(H.ldlt().solve(-g));
    IterationRecord rec;
    rec.cost_before = cost0;
    rec.cost_after = cost0;
    Eigen::Matrix<double, 6, 1> applied = Eigen::Matrix<double, 6, 1>::Zero();
    double scale = 1.0;
    for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
      const Pose candidate = retract(T, Eigen::Matrix<double, 6, 1>(scale * delta));
      const double cost = frozen_cost(source, target, corr, w, candidate);
      if (cost <= cost0) {
        rec.cost_after = cost;
        rec.halvings = h;
        rec.accepted = true;
        applied = scale * delta;
        T = candidate;
        break;
      }
    }
    result.trace.push_back(rec);
    result.iterations = it + 1;
    result.pose = T;
    if (!rec.accepted || small_step(applied.head<3>(), applied.tail<3>(), params)) {
      result.converged = true;
      break;
    }
  }
  finish(result, source.cloud, target.tree, params.max_corr_dist);
  return result;
}

RegResult icp_align(const PointCloud& source, const PointCloud& target, const Pose& init,
                    const RegParams& params) {
  params.validate();
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::NoData, "icp_align requires non-empty clouds");
  }
  const KdTree tree(target);
  RegResult result;
  result.pose = init;
  Pose T = init;
  std::vector<Eigen::Vector3d> src, dst;
  for (int it = 0; it < params.max_iterations; ++it) {
    const auto corr = find_correspondences(source, tree, T, params.max_corr_dist);
    if (corr.empty()) {
      if (it == 0) {
        throw Error(ErrorCode::NoOverlap, "no correspondences within max_corr_dist at initial pose");
      }
      break;
    }
    src.clear();
    dst.clear();
    IterationRecord rec;
    for (const auto& c : corr) {
      src.push_back(T * source.points[c.source]);
      dst.push_back(target.points[c.target]);
      rec.cost_before += (dst.back() - src.back()).squaredNorm();
    }
    const Pose update = fit_rigid_transform(src, dst);
    T = update * T;
    for (std::size_t i = 0; i < src.size(); ++i) {
      rec.cost_after += (dst[i] - update * src[i]).squaredNorm();
    }
    rec.accepted = true;
    result.trace.push_back(rec);
    result.iterations = it + 1;
    result.pose = T;
    if (small_step(so3_log(update.rotation()), update.translation(), params)) {
      result.converged = true;
      break;
    }
  }
  finish(result, source, tree, params.max_corr_dist);
  return result;
}

}  // namespace gtforge
