#pragma once

#include <cmath>

#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/sim/scene.hpp"

namespace gtforge::testing {

/// Exact surface samples on a regular grid over every rectangle.
inline PointCloud sample_surfaces(const sim::Scene& scene, double spacing) {
  PointCloud c;
  for (const auto& r : scene.surfaces()) {
    const int nu = std::max(1, static_cast<int>(std::ceil(r.edge_u.norm() / spacing)));
    const int nv = std::max(1, static_cast<int>(std::ceil(r.edge_v.norm() / spacing)));
    for (int i = 0; i <= nu; ++i) {
      for (int j = 0; j <= nv; ++j) c.points.push_back(r.corner + r.edge_u * (double(i) / nu) + r.edge_v * (double(j) / nv));
    }
  }
  return c;
}

/// Root mean square distance of the points to the nearest scene surface.
inline double rms_to_surface(const sim::Scene& scene, const PointCloud& cloud) {
  double sq = 0.0;
  for (const auto& p : cloud.points) {
    const double d = scene.distance_to_surface(p);
    sq += d * d;
  }
  return cloud.empty() ? 0.0 : std::sqrt(sq / double(cloud.size()));
}

}  // namespace gtforge::testing
