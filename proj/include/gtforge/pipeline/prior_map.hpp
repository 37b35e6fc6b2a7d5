#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtforge/geom/point_cloud.hpp"
#include "gtforge/pipeline/config.hpp"

namespace gtforge {

/// Frames integrated while the platform was still, with the SLAM pose at
/// integration time.
struct Submap {
  PointCloud cloud;
  Pose pose;
  std::size_t frame_count = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Concatenates the frames (no motion compensation). Throws NoData for an
/// empty input.
Submap integrate_submap(std::span<const PointCloud> frames, const Pose& pose = Pose::Identity());

using SubmapCache = std::vector<Submap>;

enum class MergeStatus {
  Seed,       // first submap, defines the map frame
  Refined,    // refinement accepted
  Unrefined,  // merged at the SLAM pose: refinement failed or did not improve the fit
  Skipped,    // no overlap with the map; not merged
};

std::string to_string(MergeStatus s);

struct MergeRecord {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t frame_count = 0;
  std::size_t points = 0;
  MergeStatus status = MergeStatus::Seed;
  std::string note;
  Pose initial_pose;
  Pose final_pose;
  double rmse_before = 0.0;  // inlier RMSE at the SLAM pose
  double rmse_after = 0.0;   // inlier RMSE at the merged pose
  double fitness = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct PriorMap {
  PointCloud cloud;
  std::size_t submap_count = 0;  // submaps merged into the cloud
  std::vector<MergeRecord> merge_report;
};

/// Seeds the map with the first submap at its pose, then refines each later
/// submap against the growing map (GICP or ICP from the SLAM pose) and merges
/// it, voxel-downsampling the map after every merge. A refinement that would
/// raise the inlier RMSE is discarded in favour of the SLAM pose.
/// Throws NoData for an empty cache and UnorderedTimestamps if the cache is
/// not time-ordered.
PriorMap build_prior_map(const SubmapCache& cache, const PipelineConfig& cfg);

struct DenoiseReport {
  std::size_t before = 0;
  std::size_t after = 0;
  bool skipped = false;  // map too small for the neighbourhood size
};

/// Statistical outlier removal over the merged map.
PriorMap denoise_map(const PriorMap& map, const PipelineConfig& cfg, DenoiseReport* report = nullptr);

nlohmann::json to_json(const MergeRecord& r);

}  // namespace gtforge
