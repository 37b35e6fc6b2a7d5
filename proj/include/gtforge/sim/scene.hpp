#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gtforge::sim {

/// Parallelogram corner + a*edge_u + b*edge_v, a, b in [0, 1].
struct Rectangle {
  Eigen::Vector3d corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d edge_v = Eigen::Vector3d::UnitY();
};

struct RayHit {
  double range = 0.0;
  std::size_t surface = 0;
};

class Scene {
 public:
  /// Throws InvalidArgument for an empty list or a degenerate rectangle
  /// (parallel or zero edges, non-finite values).
  Scene(std::string name, std::vector<Rectangle> surfaces);

  const std::string& name() const { return name_; }
  const std::vector<Rectangle>& surfaces() const { return surfaces_; }
  Eigen::AlignedBox3d bounds() const;

  /// Nearest hit along the unit direction `dir` within (0, max_range].
  std::optional<RayHit> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                  double max_range) const;

  /// Euclidean distance from p to the closest surface.
  double distance_to_surface(const Eigen::Vector3d& p) const;

 private:
  struct Prepared {
    Eigen::Vector3d normal;  // unit
    double uu, uv, vv, inv_det;
  };

  std::string name_;
  std::vector<Rectangle> surfaces_;
  std::vector<Prepared> prepared_;
};

/// Axis-aligned box interior: floor, ceiling and four walls (6 rectangles).
std::vector<Rectangle> box_interior(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);

/// Outer faces of an axis-aligned box without top and bottom (4 rectangles).
std::vector<Rectangle> box_sides(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);

/// Presets: room_10x8x3, corridor_40m, open_road, forest.
Scene build_scene(const std::string& preset);

std::vector<std::string> scene_presets();

}  // namespace gtforge::sim
