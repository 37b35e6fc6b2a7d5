#include "gtforge/pipeline/config.hpp"

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pose_json.hpp"
#include "gtforge/json_reader.hpp"

namespace gtforge {

void PipelineConfig::validate() const {
  thresholds.validate();
  odometry.validate();
  registration.validate();
  ndt.validate();
  if (denoise.k < 1 || !(denoise.std_mult > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "denoise k and std_mult must be positive");
  }
  if (!(map_leaf > 0.0) || !(registration_leaf > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "map_leaf and registration_leaf must be positive");
  }
}

namespace {

using nlohmann::json;

using Reader = JsonReader;

void read_reg(const json& j, const std::string& path, RegParams& p) {
  Reader(j, path)
      .field("max_corr_dist", p.max_corr_dist)
      .field("max_iterations", p.max_iterations)
      .field("translation_eps", p.translation_eps)
      .field("rotation_eps", p.rotation_eps)
      .field("k_neighbors", p.k_neighbors)
      .field("cov_epsilon", p.cov_epsilon)
      .field("max_tangential_dist", p.max_tangential_dist)
      .field("degeneracy_ratio", p.degeneracy_ratio)
      .finish();
}

}  // namespace

json to_json(const RegParams& p) {
  return {{"max_corr_dist", p.max_corr_dist}, {"max_iterations", p.max_iterations},
          {"translation_eps", p.translation_eps}, {"rotation_eps", p.rotation_eps},
          {"k_neighbors", p.k_neighbors}, {"cov_epsilon", p.cov_epsilon},
          {"max_tangential_dist", p.max_tangential_dist}, {"degeneracy_ratio", p.degeneracy_ratio}};
}

json to_json(const NdtParams& p) {
  return {{"cell_size", p.cell_size}, {"min_points_per_cell", p.min_points_per_cell},
          {"outlier_ratio", p.outlier_ratio}, {"max_iterations", p.max_iterations},
          {"translation_eps", p.translation_eps}, {"rotation_eps", p.rotation_eps}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  std::string merge = c.merge_method == MergeMethod::Gicp ? "gicp" : "icp";
  Reader(j, "pipeline")
      .object("stationary",
              [&](const json& s, const std::string& path) {
                Reader(s, path)
                    .field("accel_dev_max", c.thresholds.accel_dev_max)
                    .field("gyro_max", c.thresholds.gyro_max)
                    .field("lin_vel_max", c.thresholds.lin_vel_max)
                    .field("min_duration", c.thresholds.min_duration)
                    .field("window", c.thresholds.window)
                    .finish();
              })
      .object("odometry",
              [&](const json& s, const std::string& path) {
                Reader(s, path)
                    .field("scan_leaf", c.odometry.scan_leaf)
                    .field("map_leaf", c.odometry.map_leaf)
                    .field("keyframe_distance", c.odometry.keyframe_distance)
                    .field("keyframe_angle", c.odometry.keyframe_angle)
                    .field("max_keyframes", c.odometry.max_keyframes)
                    .object("registration", [&](const json& r, const std::string& p) {
                      read_reg(r, p, c.odometry.registration);
                    })
                    .finish();
              })
      .object("registration",
              [&](const json& s, const std::string& path) { read_reg(s, path, c.registration); })
      .object("ndt",
              [&](const json& s, const std::string& path) {
                Reader(s, path)
                    .field("cell_size", c.ndt.cell_size)
                    .field("min_points_per_cell", c.ndt.min_points_per_cell)
                    .field("outlier_ratio", c.ndt.outlier_ratio)
                    .field("max_iterations", c.ndt.max_iterations)
                    .field("translation_eps", c.ndt.translation_eps)
                    .field("rotation_eps", c.ndt.rotation_eps)
                    .finish();
              })
      .object("denoise",
              [&](const json& s, const std::string& path) {
                Reader(s, path).field("k", c.denoise.k).field("std_mult", c.denoise.std_mult).finish();
              })
      .field("map_leaf", c.map_leaf)
      .field("registration_leaf", c.registration_leaf)
      .field("merge_method", merge)
      .field("submap_include_spinning", c.submap_include_spinning)
      .object("extrinsic",
              [&](const json& s, const std::string& path) {
                try {
                  c.extrinsic = pose_from_json(s);
                } catch (const Error& e) {
                  throw Error(ErrorCode::InvalidArgument, fmt::format("'{}': {}", path, e.what()));
                }
              })
      .finish();
  if (merge == "gicp") {
    c.merge_method = MergeMethod::Gicp;
  } else if (merge == "icp") {
    c.merge_method = MergeMethod::Icp;
  } else {
    throw Error(ErrorCode::InvalidArgument, fmt::format("merge_method must be 'gicp' or 'icp', got '{}'", merge));
  }
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  json j = {
      {"stationary",
       {{"accel_dev_max", c.thresholds.accel_dev_max},
        {"gyro_max", c.thresholds.gyro_max},
        {"lin_vel_max", c.thresholds.lin_vel_max},
        {"min_duration", c.thresholds.min_duration},
        {"window", c.thresholds.window}}},
      {"odometry",
       {{"scan_leaf", c.odometry.scan_leaf},
        {"map_leaf", c.odometry.map_leaf},
        {"keyframe_distance", c.odometry.keyframe_distance},
        {"keyframe_angle", c.odometry.keyframe_angle},
        {"max_keyframes", c.odometry.max_keyframes},
        {"registration", to_json(c.odometry.registration)}}},
      {"registration", to_json(c.registration)},
      {"ndt", to_json(c.ndt)},
      {"denoise", {{"k", c.denoise.k}, {"std_mult", c.denoise.std_mult}}},
      {"map_leaf", c.map_leaf},
      {"registration_leaf", c.registration_leaf},
      {"merge_method", c.merge_method == MergeMethod::Gicp ? "gicp" : "icp"},
      {"submap_include_spinning", c.submap_include_spinning},
  };
  if (c.extrinsic) j["extrinsic"] = pose_to_json(*c.extrinsic);
  return j;
}

}  // namespace gtforge
