#include "gtforge/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge::sim {

namespace {

constexpr double kEdgeSlack = 1e-9;

double point_segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

Scene::Scene(std::string name, std::vector<Rectangle> surfaces)
    : name_(std::move(name)), surfaces_(std::move(surfaces)) {
  if (surfaces_.empty()) throw Error(ErrorCode::InvalidArgument, "a scene needs at least one surface");
  prepared_.reserve(surfaces_.size());
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const Rectangle& r = surfaces_[i];
    if (!r.corner.allFinite() || !r.edge_u.allFinite() || !r.edge_v.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("surface {} has non-finite values", i));
    }
    const Eigen::Vector3d n = r.edge_u.cross(r.edge_v);
    const double scale = r.edge_u.norm() * r.edge_v.norm();
    if (!(scale > 0.0) || n.norm() < 1e-9 * scale) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("surface {} is degenerate (zero or parallel edges)", i));
    }
    Prepared p;
    p.normal = n.normalized();
    p.uu = r.edge_u.squaredNorm();
    p.uv = r.edge_u.dot(r.edge_v);
    p.vv = r.edge_v.squaredNorm();
    p.inv_det = 1.0 / (p.uu * p.vv - p.uv * p.uv);
    prepared_.push_back(p);
  }
}

Eigen::AlignedBox3d Scene::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& r : surfaces_) {
    box.extend(r.corner);
    box.extend(r.corner + r.edge_u);
    box.extend(r.corner + r.edge_v);
    box.extend(r.corner + r.edge_u + r.edge_v);
  }
  return box;
}

std::optional<RayHit> Scene::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                       double max_range) const {
  std::optional<RayHit> best;
  double best_t = max_range;
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const Rectangle& r = surfaces_[i];
    const Prepared& p = prepared_[i];
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-15) continue;
    const double t = p.normal.dot(r.corner - origin) / denom;
    if (!(t > 1e-9) || t > best_t) continue;
    const Eigen::Vector3d h = origin + t * dir - r.corner;
    const double hu = h.dot(r.edge_u), hv = h.dot(r.edge_v);
    const double a = (p.vv * hu - p.uv * hv) * p.inv_det;
    const double b = (p.uu * hv - p.uv * hu) * p.inv_det;
    if (a < -kEdgeSlack || a > 1.0 + kEdgeSlack || b < -kEdgeSlack || b > 1.0 + kEdgeSlack) continue;
    best_t = t;
    best = RayHit{t, i};
  }
  return best;
}

double Scene::distance_to_surface(const Eigen::Vector3d& q) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const Rectangle& r = surfaces_[i];
    const Prepared& p = prepared_[i];
    const Eigen::Vector3d h = q - r.corner;
    const double hu = h.dot(r.edge_u), hv = h.dot(r.edge_v);
    const double a = (p.vv * hu - p.uv * hv) * p.inv_det;
    const double b = (p.uu * hv - p.uv * hu) * p.inv_det;
    double d;
    if (a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0) {
      d = std::abs(p.normal.dot(h));
    } else {
      const Eigen::Vector3d c0 = r.corner, c1 = r.corner + r.edge_u, c2 = c1 + r.edge_v,
                            c3 = r.corner + r.edge_v;
      d = std::min({point_segment_distance(q, c0, c1), point_segment_distance(q, c1, c2),
                    point_segment_distance(q, c2, c3), point_segment_distance(q, c3, c0)});
    }
    best = std::min(best, d);
  }
  return best;
}

std::vector<Rectangle> box_interior(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  const Eigen::Vector3d s = hi - lo;
  const Eigen::Vector3d ex(s.x(), 0, 0), ey(0, s.y(), 0), ez(0, 0, s.z());
  return {
      {lo, ex, ey},                               // floor
      {lo + ez, ex, ey},                          // ceiling
      {lo, ex, ez},                               // y = lo
      {lo + ey, ex, ez},                          // y = hi
      {lo, ey, ez},                               // x = lo
      {lo + ex, ey, ez},                          // x = hi
  };
}

std::vector<Rectangle> box_sides(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  auto rects = box_interior(lo, hi);
  return {rects[2], rects[3], rects[4], rects[5]};
}

namespace {

Scene room() {
  return Scene("room_10x8x3", box_interior({-5.0, -4.0, 0.0}, {5.0, 4.0, 3.0}));
}

Scene corridor() {
  // 40 m x 2 m x 3 m. Pillars every 2 m alternate between the walls; they are
  // the only structure fixing position along the corridor.
  auto rects = box_interior({0.0, -1.0, 0.0}, {40.0, 1.0, 3.0});
  for (int k = 0; k < 19; ++k) {
    const double x = 1.8 + 2.0 * k;
    const bool left = k % 2 == 0;
    const Eigen::Vector3d lo(x, left ? 0.7 : -1.0, 0.0);
    const Eigen::Vector3d hi(x + 0.4, left ? 1.0 : -0.7, 3.0);
    for (const auto& r : box_sides(lo, hi)) rects.push_back(r);
  }
  return Scene("corridor_40m", std::move(rects));
}

Scene open_road() {
  std::vector<Rectangle> rects;
  rects.push_back({{-10.0, -15.0, 0.0}, {120.0, 0.0, 0.0}, {0.0, 30.0, 0.0}});
  // Building facades on both sides with gaps between blocks.
  const double lengths[] = {18.0, 25.0, 12.0, 30.0, 20.0};
  double x = -5.0;
  for (int i = 0; i < 5; ++i) {
    for (const auto& r : box_sides({x, 9.0, 0.0}, {x + lengths[i], 18.0, 8.0 + 2.0 * (i % 3)})) {
      rects.push_back(r);
    }
    for (const auto& r :
         box_sides({x + 4.0, -19.0, 0.0}, {x + 4.0 + lengths[4 - i], -10.0, 6.0 + 3.0 * (i % 2)})) {
      rects.push_back(r);
    }
    x += lengths[i] + 4.0;
  }
  for (int k = 0; k < 11; ++k) {
    const double px = 10.0 * k;
    for (const auto& r : box_sides({px, 6.0, 0.0}, {px + 0.2, 6.2, 4.0})) rects.push_back(r);
    for (const auto& r : box_sides({px + 5.0, -6.2, 0.0}, {px + 5.2, -6.0, 4.0})) rects.push_back(r);
  }
  return Scene("open_road", std::move(rects));
}

Scene forest() {
  std::vector<Rectangle> rects;
  rects.push_back({{-20.0, -20.0, 0.0}, {40.0, 0.0, 0.0}, {0.0, 40.0, 0.0}});
  std::mt19937_64 rng(20220614);
  std::uniform_real_distribution<double> pos(-18.0, 18.0);
  std::uniform_real_distribution<double> width(0.2, 0.5);
  int placed = 0;
  while (placed < 60) {
    const double x = pos(rng), y = pos(rng), w = width(rng);
    const double h = 0.5 * w;
    if (std::hypot(x, y) < 2.5) continue;  // keep a clearing around the origin
    // Trunk approximated by two crossed vertical rectangles.
    rects.push_back({{x - h, y, 0.0}, {w, 0.0, 0.0}, {0.0, 0.0, 8.0}});
    rects.push_back({{x, y - h, 0.0}, {0.0, w, 0.0}, {0.0, 0.0, 8.0}});
    ++placed;
  }
  return Scene("forest", std::move(rects));
}

}  // namespace

std::vector<std::string> scene_presets() { return {"room_10x8x3", "corridor_40m", "open_road", "forest"}; }

Scene build_scene(const std::string& preset) {
  if (preset == "room_10x8x3") return room();
  if (preset == "corridor_40m") return corridor();
  if (preset == "open_road") return open_road();
  if (preset == "forest") return forest();
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown scene preset '{}'", preset));
}

}  // namespace gtforge::sim
