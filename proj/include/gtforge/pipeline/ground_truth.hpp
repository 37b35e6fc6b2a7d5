#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtforge/eval/trajectory.hpp"
#include "gtforge/geom/scan_sequence.hpp"
#include "gtforge/ndt/ndt.hpp"
#include "gtforge/pipeline/config.hpp"
#include "gtforge/pipeline/imu.hpp"
#include "gtforge/pipeline/prior_map.hpp"

namespace gtforge {

/// A dataset held either on disk or in memory. Scan sequences are not owned.
struct DatasetView {
  const ScanSequence* spinning = nullptr;
  const ScanSequence* solid = nullptr;
  const std::vector<ImuSample>* imu = nullptr;
  const Trajectory* external_odometry = nullptr;  // optional
  Pose extrinsic;                                 // spinning-from-solid
};

/// Dataset directory: scans_spinning/*.pcd, scans_solid/*.pcd, imu.csv, and
/// optionally odometry.tum and extrinsics.json.
class DiskDataset {
 public:
  /// Throws MissingInput naming the first missing path.
  explicit DiskDataset(const std::filesystem::path& dir);

  DatasetView view(const PipelineConfig& cfg) const;
  const std::filesystem::path& dir() const { return dir_; }
  const PcdDirectoryScans& spinning() const { return *spinning_; }
  const PcdDirectoryScans& solid() const { return *solid_; }
  const std::vector<ImuSample>& imu() const { return imu_; }
  const std::optional<Trajectory>& external_odometry() const { return odometry_; }
  const Pose& extrinsic() const { return extrinsic_; }

 private:
  std::filesystem::path dir_;
  std::unique_ptr<PcdDirectoryScans> spinning_;
  std::unique_ptr<PcdDirectoryScans> solid_;
  std::vector<ImuSample> imu_;
  std::optional<Trajectory> odometry_;
  Pose extrinsic_;
};

/// Reads {"spinning_from_solid": pose}.
Pose read_extrinsics(const std::filesystem::path& path);

struct MapBuildResult {
  std::vector<Segment> segments;
  SubmapCache submaps;  // clouds released after merging
  PriorMap merged;      // before denoising (cloud released)
  PriorMap map;         // denoised
  DenoiseReport denoise;
};

/// Odometry of the spinning scans: the external poses when present (they
/// must cover every scan stamp), otherwise incremental_odometry.
Trajectory run_odometry(const DatasetView& data, const PipelineConfig& cfg);

/// Stationary gating, submap integration, merge and denoise.
/// Throws ZeroSegments if no stationary segment contains a solid-state frame.
MapBuildResult build_map(const DatasetView& data, const Trajectory& odometry, const PipelineConfig& cfg);

/// NDT tracking of the spinning scans against `grid`, starting from `init`.
/// Odometry, when given, supplies the scan-to-scan prediction.
Trajectory localize(const NdtGrid& grid, const ScanSequence& spinning, const Pose& init,
                    const PipelineConfig& cfg, const Trajectory* odometry = nullptr);

struct GroundTruthResult {
  Trajectory odometry;
  MapBuildResult map;
  NdtGrid grid;
  Trajectory ground_truth;
  std::vector<std::pair<std::string, double>> timing;  // stage, seconds
};

/// All stages in memory.
GroundTruthResult run_ground_truth(const DatasetView& data, const PipelineConfig& cfg);

/// Report sections; deterministic (no paths, no wall-clock values).
nlohmann::json map_report(const MapBuildResult& r, const Trajectory& odometry, bool external_odometry);
nlohmann::json dataset_report(const DatasetView& view);
nlohmann::json localization_report(const Trajectory& gt, const NdtGrid& grid);
nlohmann::json tool_info();

/// Reads `path` if it exists (else an empty object), merges `section` under
/// `key`, and writes it back.
void update_report(const std::filesystem::path& path, const std::string& key, const nlohmann::json& section);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Full run on a dataset directory. Writes prior_map.pcd, ground_truth.tum,
/// slam_odometry.tum, ndt_grid.bin, report.json and timing.json to out_dir.
GroundTruthResult generate_ground_truth(const std::filesystem::path& dataset_dir,
                                        const std::filesystem::path& out_dir, const PipelineConfig& cfg);

}  // namespace gtforge
