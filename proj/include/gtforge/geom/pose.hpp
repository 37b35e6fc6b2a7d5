#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace gtforge {

/// Stamped rigid transform (world-from-body). Rotation is a Hamilton unit
/// quaternion stored (w,x,y,z); applying the pose to a point gives R*p + t.
template <typename Scalar>
class PoseT {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  PoseT() : rotation_(Quaternion::Identity()), translation_(Vector3::Zero()) {}

  PoseT(const Quaternion& rotation, const Vector3& translation, Scalar stamp = Scalar(0))
      : stamp_(stamp), rotation_(rotation.normalized()), translation_(translation) {}

  PoseT(const Matrix3& rotation, const Vector3& translation, Scalar stamp = Scalar(0))
      : PoseT(Quaternion(rotation), translation, stamp) {}

  static PoseT Identity() { return PoseT(); }

  static PoseT FromMatrix(const Matrix4& m, Scalar stamp = Scalar(0)) {
    return PoseT(Matrix3(m.template topLeftCorner<3, 3>()), m.template topRightCorner<3, 1>(),
                 stamp);
  }

  static PoseT Translation(const Vector3& t) { return PoseT(Quaternion::Identity(), t); }

  static PoseT Rotation(const Eigen::AngleAxis<Scalar>& aa) {
    return PoseT(Quaternion(aa), Vector3::Zero());
  }

  Scalar stamp() const { return stamp_; }
  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  PoseT with_stamp(Scalar stamp) const {
    PoseT p = *this;
    p.stamp_ = stamp;
    return p;
  }

  PoseT inverse() const {
    const Quaternion qi = rotation_.conjugate();
    return PoseT(qi, -(qi * translation_), stamp_);
  }

  Vector3 operator*(const Vector3& p) const { return rotation_ * p + translation_; }

  /// Applies `rhs` first, then `*this`. The stamp of the left operand is kept.
  PoseT operator*(const PoseT& rhs) const {
    return PoseT(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_, stamp_);
  }

  template <typename Other>
  PoseT<Other> cast() const {
    return PoseT<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>(),
                        static_cast<Other>(stamp_));
  }

 private:
  Scalar stamp_ = Scalar(0);
  Quaternion rotation_;
  Vector3 translation_;
};

using Pose = PoseT<double>;
using Posef = PoseT<float>;

template <typename Scalar>
PoseT<Scalar> compose(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
PoseT<Scalar> inverse(const PoseT<Scalar>& p) {
  return p.inverse();
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -v.z(), v.y(), v.z(), Scalar(0), -v.x(), -v.y(), v.x(), Scalar(0);
  return m;
}

template <typename Scalar>
Eigen::Quaternion<Scalar> so3_exp(const Eigen::Matrix<Scalar, 3, 1>& omega) {
  const Scalar angle = omega.norm();
  if (angle < Scalar(1e-12)) {
    Eigen::Quaternion<Scalar> q(Scalar(1), omega.x() / 2, omega.y() / 2, omega.z() / 2);
    return q.normalized();
  }
  return Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, omega / angle));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> so3_log(const Eigen::Quaternion<Scalar>& q) {
  Eigen::Quaternion<Scalar> qn = q.normalized();
  if (qn.w() < Scalar(0)) qn.coeffs() = -qn.coeffs();
  const Scalar vnorm = qn.vec().norm();
  if (vnorm < Scalar(1e-12)) return Scalar(2) * qn.vec();
  const Scalar angle = Scalar(2) * std::atan2(vnorm, qn.w());
  return qn.vec() * (angle / vnorm);
}

/// Rotation angle of the pose, radians in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const PoseT<Scalar>& p) {
  return so3_log(p.rotation()).norm();
}

/// Right perturbation used by every optimiser in the library:
/// R <- R * Exp(delta.head(3)), t <- t + delta.tail(3).
template <typename Scalar>
PoseT<Scalar> retract(const PoseT<Scalar>& p, const Eigen::Matrix<Scalar, 6, 1>& delta) {
  return PoseT<Scalar>(p.rotation() * so3_exp<Scalar>(delta.template head<3>()),
                       p.translation() + delta.template tail<3>(), p.stamp());
}

/// Translation and rotation distance between two poses.
struct PoseDistance {
  double translation = 0.0;
  double rotation = 0.0;
};

template <typename Scalar>
PoseDistance pose_distance(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  const PoseT<Scalar> d = a.inverse() * b;
  return {static_cast<double>((a.translation() - b.translation()).norm()),
          static_cast<double>(rotation_angle(d))};
}

/// Pose from yaw/pitch/roll (Z-Y-X, radians) and a translation.
inline Pose pose_from_ypr(double yaw, double pitch, double roll, const Eigen::Vector3d& t,
                          double stamp = 0.0) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  return Pose(q, t, stamp);
}

}  // namespace gtforge
