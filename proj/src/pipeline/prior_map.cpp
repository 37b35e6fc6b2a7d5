#include "gtforge/pipeline/prior_map.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/filters.hpp"
#include "gtforge/geom/pose_json.hpp"

namespace gtforge {

Submap integrate_submap(std::span<const PointCloud> frames, const Pose& pose) {
  if (frames.empty()) throw Error(ErrorCode::NoData, "cannot integrate a submap from zero frames");
  Submap s;
  s.pose = pose;
  s.frame_count = frames.size();
  s.t_start = frames.front().stamp;
  s.t_end = frames.back().stamp;
  std::size_t total = 0;
  for (const auto& f : frames) total += f.size();
  s.cloud = frames.front().header_copy();
  s.cloud.reserve(total);
  for (const auto& f : frames) s.cloud.append(f);
  return s;
}

std::string to_string(MergeStatus s) {
  switch (s) {
    case MergeStatus::Seed: return "seed";
    case MergeStatus::Refined: return "refined";
    case MergeStatus::Unrefined: return "unrefined";
    case MergeStatus::Skipped: return "skipped";
  }
  return "unknown";
}

PriorMap build_prior_map(const SubmapCache& cache, const PipelineConfig& cfg) {
  cfg.validate();
  if (cache.empty()) throw Error(ErrorCode::NoData, "cannot build a prior map from an empty submap cache");
  for (std::size_t i = 1; i < cache.size(); ++i) {
    if (cache[i].t_start < cache[i - 1].t_end) {
      throw Error(ErrorCode::UnorderedTimestamps, fmt::format("submap {} overlaps or precedes submap {}", i, i - 1));
    }
  }

  PriorMap map;
  {
    const Submap& s = cache.front();
    map.cloud = voxel_downsample(transform_cloud(s.cloud, s.pose), cfg.map_leaf);
    map.cloud.frame_id = "map";
    MergeRecord r;
    r.t_start = s.t_start, r.t_end = s.t_end, r.frame_count = s.frame_count, r.points = s.cloud.size();
    r.initial_pose = r.final_pose = s.pose;
    r.fitness = 1.0;
    r.converged = true;
    map.merge_report.push_back(r);
    map.submap_count = 1;
  }

  for (std::size_t i = 1; i < cache.size(); ++i) {
    const Submap& s = cache[i];
    MergeRecord r;
    r.index = i;
    r.t_start = s.t_start, r.t_end = s.t_end, r.frame_count = s.frame_count, r.points = s.cloud.size();
    r.initial_pose = r.final_pose = s.pose;

    const PointCloud source = voxel_downsample(s.cloud, cfg.registration_leaf);
    const PointCloud target = voxel_downsample(map.cloud, cfg.registration_leaf);
    const KdTree target_tree(target);
    const OverlapStats before = overlap_stats(source, target_tree, s.pose, cfg.registration.max_corr_dist);
    r.rmse_before = r.rmse_after = before.inlier_rmse;
    r.fitness = before.fitness;
    if (before.inliers == 0) {
      r.status = MergeStatus::Skipped;
      r.note = "no overlap with the map at the SLAM pose";
      spdlog::warn("prior map: submap {} skipped ({})", i, r.note);
      map.merge_report.push_back(r);
      continue;
    }

    try {
      const RegResult reg = cfg.merge_method == MergeMethod::Gicp
                                ? gicp_align(prepare_cloud(source, cfg.registration),
                                             prepare_cloud(target, cfg.registration), s.pose,
                                             cfg.registration)
                                : icp_align(source, target, s.pose, cfg.registration);
      r.iterations = reg.iterations;
      r.converged = reg.converged;
      // Judge both poses with the same nearest-neighbour statistic.
      const OverlapStats after = overlap_stats(source, target_tree, reg.pose, cfg.registration.max_corr_dist);
      if (after.inliers > 0 && after.inlier_rmse <= before.inlier_rmse) {
        r.status = MergeStatus::Refined;
        r.final_pose = reg.pose.with_stamp(s.pose.stamp());
        r.rmse_after = after.inlier_rmse;
        r.fitness = after.fitness;
        if (!reg.converged) r.note = "iteration limit reached";
      } else {
        r.status = MergeStatus::Unrefined;
        r.note = "refinement did not lower the inlier RMSE";
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoOverlap) {
        r.status = MergeStatus::Skipped;
        r.note = e.what();
        spdlog::warn("prior map: submap {} skipped ({})", i, r.note);
        map.merge_report.push_back(r);
        continue;
      }
      r.status = MergeStatus::Unrefined;
      r.note = e.what();
    }
    if (r.status == MergeStatus::Unrefined) spdlog::warn("prior map: submap {} merged unrefined ({})", i, r.note);

    PointCloud merged = std::move(map.cloud);
    merged.append(transform_cloud(s.cloud, r.final_pose));
    map.cloud = voxel_downsample(merged, cfg.map_leaf);
    ++map.submap_count;
    map.merge_report.push_back(r);
  }
  return map;
}

PriorMap denoise_map(const PriorMap& map, const PipelineConfig& cfg, DenoiseReport* report) {
  const auto result = remove_outliers(map.cloud, static_cast<std::size_t>(cfg.denoise.k), cfg.denoise.std_mult);
  if (result.skipped) {
    spdlog::warn("denoise: map has {} points, fewer than k+1 = {}; left unchanged", map.cloud.size(),
                 cfg.denoise.k + 1);
  }
  if (report != nullptr) *report = {map.cloud.size(), result.cloud.size(), result.skipped};
  PriorMap out;
  out.cloud = result.cloud;
  out.submap_count = map.submap_count;
  out.merge_report = map.merge_report;
  return out;
}

nlohmann::json to_json(const MergeRecord& r) {
  return {{"index", r.index},
          {"t_start", r.t_start},
          {"t_end", r.t_end},
          {"frame_count", r.frame_count},
          {"points", r.points},
          {"status", to_string(r.status)},
          {"note", r.note},
          {"initial_pose", pose_to_json(r.initial_pose)},
          {"final_pose", pose_to_json(r.final_pose)},
          {"rmse_before", r.rmse_before},
          {"rmse_after", r.rmse_after},
          {"fitness", r.fitness},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

}  // namespace gtforge
