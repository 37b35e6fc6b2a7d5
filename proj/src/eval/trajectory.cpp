#include "gtforge/eval/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge {

Trajectory::Trajectory(std::vector<Pose> poses) {
  poses_.reserve(poses.size());
  for (const auto& p : poses) push_back(p);
}

void Trajectory::push_back(const Pose& pose, bool degraded) {
  if (!poses_.empty() && !(pose.stamp() > poses_.back().stamp())) {
    throw Error(ErrorCode::UnorderedTimestamps,
                fmt::format("trajectory stamps must increase strictly ({:.9f} after {:.9f})",
                            pose.stamp(), poses_.back().stamp()));
  }
  poses_.push_back(pose);
  degraded_.push_back(degraded ? 1 : 0);
}

std::size_t Trajectory::degraded_count() const {
  return static_cast<std::size_t>(std::count(degraded_.begin(), degraded_.end(), 1));
}

std::size_t Trajectory::nearest_index(double t) const {
  if (poses_.empty()) throw Error(ErrorCode::NoData, "empty trajectory");
  const auto it = std::lower_bound(poses_.begin(), poses_.end(), t,
                                   [](const Pose& p, double v) { return p.stamp() < v; });
  if (it == poses_.begin()) return 0;
  if (it == poses_.end()) return poses_.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - poses_.begin());
  return (it->stamp() - t) < (t - (it - 1)->stamp()) ? hi : hi - 1;
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) {
        throw Error(ErrorCode::Parse, fmt::format("{}:{}: expected 8 values", path.string(), lineno));
      }
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!std::isfinite(q.norm()) || q.norm() < 1e-6) {
      throw Error(ErrorCode::Parse, fmt::format("{}:{}: invalid quaternion", path.string(), lineno));
    }
    traj.push_back(Pose(q, Eigen::Vector3d(v[1], v[2], v[3]), v[0]));
  }
  return traj;
}

void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << "# t tx ty tz qx qy qz qw\n";
  for (const Pose& p : traj) {
    const auto& t = p.translation();
    const auto& q = p.rotation();
    out << fmt::format("{:.9f} {:.9f} {:.9f} {:.9f} {:.12f} {:.12f} {:.12f} {:.12f}\n", p.stamp(),
                       t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace gtforge
