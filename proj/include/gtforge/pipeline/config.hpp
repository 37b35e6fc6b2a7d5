#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "gtforge/ndt/ndt.hpp"
#include "gtforge/pipeline/stationary.hpp"
#include "gtforge/registration/odometry.hpp"
#include "gtforge/registration/registration.hpp"

namespace gtforge {

struct DenoiseParams {
  int k = 10;
  double std_mult = 4.0;
};

enum class MergeMethod { Gicp, Icp };

/// SLAM poses are already close, so refinement must not slide a submap along
/// surfaces it only partly shares with the map.
inline RegParams merge_defaults() {
  RegParams p;
  p.max_tangential_dist = 0.15;
  p.degeneracy_ratio = 0.03;
  return p;
}

struct PipelineConfig {
  StationaryThresholds thresholds;
  OdometryParams odometry;
  RegParams registration = merge_defaults();  // submap refinement against the growing map
  NdtParams ndt;
  DenoiseParams denoise;
  double map_leaf = 0.05;          // merged map voxel size, metres
  double registration_leaf = 0.1;  // clouds are thinned to this for refinement
  MergeMethod merge_method = MergeMethod::Gicp;
  bool submap_include_spinning = false;
  std::optional<Pose> extrinsic;   // spinning-from-solid; overrides extrinsics.json

  void validate() const;
};

/// Strict parse: unknown keys are rejected with InvalidArgument, as are
/// values of the wrong type. Missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);

nlohmann::json to_json(const RegParams& p);
nlohmann::json to_json(const NdtParams& p);

}  // namespace gtforge
