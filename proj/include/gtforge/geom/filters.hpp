#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "gtforge/error.hpp"
#include "gtforge/geom/kdtree.hpp"
#include "gtforge/geom/point_cloud.hpp"

namespace gtforge {

/// Integer voxel coordinate; floor(coord / leaf) per axis.
struct VoxelKey {
  std::int64_t x = 0, y = 0, z = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

template <typename Scalar>
VoxelKey voxel_key(const Point3T<Scalar>& p, Scalar leaf,
                   const Point3T<Scalar>& origin = Point3T<Scalar>::Zero()) {
  return {static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / leaf)),
          static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / leaf)),
          static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / leaf))};
}

/// One centroid per occupied voxel. Output order follows the first point seen
/// in each voxel; member sums accumulate in input order.
template <typename Scalar>
PointCloudT<Scalar> voxel_downsample(const PointCloudT<Scalar>& cloud, Scalar leaf) {
  if (!(leaf > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "voxel leaf must be positive");
  struct Acc {
    Point3T<Scalar> sum = Point3T<Scalar>::Zero();
    double intensity = 0.0;
    std::size_t count = 0;
  };
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot;
  slot.reserve(cloud.size());
  std::vector<Acc> acc;
  const bool with_i = cloud.has_intensity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto [it, inserted] = slot.try_emplace(voxel_key(cloud.points[i], leaf), acc.size());
    if (inserted) acc.emplace_back();
    Acc& a = acc[it->second];
    a.sum += cloud.points[i];
    if (with_i) a.intensity += cloud.intensity[i];
    ++a.count;
  }
  PointCloudT<Scalar> out = cloud.header_copy();
  out.points.reserve(acc.size());
  if (with_i) out.intensity.reserve(acc.size());
  for (const Acc& a : acc) {
    out.points.push_back(a.sum / Scalar(a.count));
    if (with_i) out.intensity.push_back(static_cast<float>(a.intensity / double(a.count)));
  }
  return out;
}

template <typename Scalar>
struct OutlierRemovalT {
  PointCloudT<Scalar> cloud;
  std::vector<std::size_t> kept;  // indices into the input
  bool skipped = false;           // input had fewer than k+1 points
};

/// Statistical outlier removal: drops points whose mean distance to their k
/// nearest neighbours exceeds mean + std_mult * std over the whole cloud
/// (population std).
template <typename Scalar>
OutlierRemovalT<Scalar> remove_outliers(const PointCloudT<Scalar>& cloud, std::size_t k,
                                        Scalar std_mult) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "outlier removal requires k >= 1");
  OutlierRemovalT<Scalar> result;
  if (cloud.size() < k + 1) {
    result.cloud = cloud;
    result.kept.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) result.kept[i] = i;
    result.skipped = true;
    return result;
  }
  const KdTreeT<Scalar> tree(cloud);
  std::vector<Scalar> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], k + 1);
    Scalar sum = Scalar(0);
    std::size_t used = 0;
    for (const auto& n : nn) {
      if (n.index == i || used == k) continue;
      sum += n.distance;
      ++used;
    }
    mean_dist[i] = sum / Scalar(used);
  }
  Scalar mu = Scalar(0);
  for (Scalar d : mean_dist) mu += d;
  mu /= Scalar(mean_dist.size());
  Scalar var = Scalar(0);
  for (Scalar d : mean_dist) var += (d - mu) * (d - mu);
  var /= Scalar(mean_dist.size());
  // Relative slack so equal distances are not split by summation rounding.
  const Scalar threshold =
      (mu + std_mult * std::sqrt(var)) * (Scalar(1) + std::numeric_limits<Scalar>::epsilon() * 64);

  result.cloud = cloud.header_copy();
  const bool with_i = cloud.has_intensity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] > threshold) continue;
    result.kept.push_back(i);
    result.cloud.points.push_back(cloud.points[i]);
    if (with_i) result.cloud.intensity.push_back(cloud.intensity[i]);
  }
  return result;
}

}  // namespace gtforge
