#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gtforge/geom/pose.hpp"

namespace gtforge {

/// Stamped poses with strictly increasing timestamps. Each pose carries a
/// `degraded` flag set by estimators that fell back to a prediction.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws UnorderedTimestamps if the stamps are not strictly increasing.
  explicit Trajectory(std::vector<Pose> poses);

  void push_back(const Pose& pose, bool degraded = false);

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const Pose& operator[](std::size_t i) const { return poses_[i]; }
  const Pose& front() const { return poses_.front(); }
  const Pose& back() const { return poses_.back(); }
  const std::vector<Pose>& poses() const { return poses_; }
  bool degraded(std::size_t i) const { return degraded_[i] != 0; }
  std::size_t degraded_count() const;

  std::vector<Pose>::const_iterator begin() const { return poses_.begin(); }
  std::vector<Pose>::const_iterator end() const { return poses_.end(); }

  /// Index of the pose closest in time to t.
  std::size_t nearest_index(double t) const;

 private:
  std::vector<Pose> poses_;
  std::vector<std::uint8_t> degraded_;
};

/// TUM format: "t tx ty tz qx qy qz qw" per line, '#' comments.
Trajectory read_tum(const std::filesystem::path& path);
void write_tum(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace gtforge
