#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gtforge/geom/pose.hpp"

namespace gtforge {

template <typename Scalar>
using Point3T = Eigen::Matrix<Scalar, 3, 1>;

/// Timestamped set of 3D points. `intensity` is either empty or one value per point.
template <typename Scalar>
struct PointCloudT {
  using Point = Point3T<Scalar>;

  std::vector<Point> points;
  std::vector<float> intensity;
  double stamp = 0.0;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensity() const { return !intensity.empty(); }

  const Point& operator[](std::size_t i) const { return points[i]; }

  void reserve(std::size_t n) {
    points.reserve(n);
    if (has_intensity()) intensity.reserve(n);
  }

  /// Appends `other`; intensity is kept only when both sides carry it.
  void append(const PointCloudT& other) {
    const bool keep_intensity = (empty() || has_intensity()) && other.has_intensity();
    if (!keep_intensity) intensity.clear();
    points.insert(points.end(), other.points.begin(), other.points.end());
    if (keep_intensity) intensity.insert(intensity.end(), other.intensity.begin(), other.intensity.end());
  }

  PointCloudT header_copy() const {
    PointCloudT c;
    c.stamp = stamp;
    c.frame_id = frame_id;
    return c;
  }
};

using PointCloud = PointCloudT<double>;
using PointCloudf = PointCloudT<float>;

/// Drops points with any non-finite coordinate. Returns the number removed.
template <typename Scalar>
std::size_t remove_non_finite(PointCloudT<Scalar>& cloud) {
  std::size_t out = 0;
  const bool with_i = cloud.has_intensity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.points[i].allFinite()) continue;
    cloud.points[out] = cloud.points[i];
    if (with_i) cloud.intensity[out] = cloud.intensity[i];
    ++out;
  }
  const std::size_t removed = cloud.size() - out;
  cloud.points.resize(out);
  if (with_i) cloud.intensity.resize(out);
  return removed;
}

template <typename Scalar>
PointCloudT<Scalar> transform_cloud(const PointCloudT<Scalar>& cloud, const PoseT<Scalar>& T) {
  PointCloudT<Scalar> out = cloud;
  const Eigen::Matrix<Scalar, 3, 3> R = T.rotation_matrix();
  const Point3T<Scalar> t = T.translation();
  for (auto& p : out.points) p = R * p + t;
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> centroid(const PointCloudT<Scalar>& cloud) {
  Eigen::Matrix<Scalar, 3, 1> sum = Eigen::Matrix<Scalar, 3, 1>::Zero();
  for (const auto& p : cloud.points) sum += p;
  return cloud.empty() ? sum : Eigen::Matrix<Scalar, 3, 1>(sum / Scalar(cloud.size()));
}

}  // namespace gtforge
