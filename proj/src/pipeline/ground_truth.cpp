#include "gtforge/pipeline/ground_truth.hpp"

#include <chrono>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pcd_io.hpp"
#include "gtforge/geom/pose_json.hpp"

#ifndef GTFORGE_VERSION
#define GTFORGE_VERSION "unknown"
#endif

namespace gtforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(const fs::path& p, bool directory) {
  std::error_code ec;
  const bool ok = directory ? fs::is_directory(p, ec) : fs::is_regular_file(p, ec);
  if (!ok) {
    throw Error(ErrorCode::MissingInput,
                fmt::format("missing {} {}", directory ? "directory" : "file", p.string()));
  }
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void check_view(const DatasetView& d) {
  if (d.spinning == nullptr || d.solid == nullptr || d.imu == nullptr) {
    throw Error(ErrorCode::MissingInput, "dataset needs spinning scans, solid-state scans and IMU data");
  }
  if (d.spinning->empty()) throw Error(ErrorCode::MissingInput, "dataset has no spinning scans");
  if (d.imu->empty()) throw Error(ErrorCode::MissingInput, "dataset has no IMU samples");
}

}  // namespace

Pose read_extrinsics(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object() || !j.contains("spinning_from_solid") || j.size() != 1) {
    throw Error(ErrorCode::Parse, fmt::format("{}: expected a single 'spinning_from_solid' pose", path.string()));
  }
  return pose_from_json(j.at("spinning_from_solid"));
}

DiskDataset::DiskDataset(const fs::path& dir) : dir_(dir) {
  require(dir, true);
  require(dir / "scans_spinning", true);
  require(dir / "scans_solid", true);
  require(dir / "imu.csv", false);
  spinning_ = std::make_unique<PcdDirectoryScans>(dir / "scans_spinning");
  solid_ = std::make_unique<PcdDirectoryScans>(dir / "scans_solid");
  imu_ = read_imu_csv(dir / "imu.csv");
  if (fs::exists(dir / "odometry.tum")) odometry_ = read_tum(dir / "odometry.tum");
  if (fs::exists(dir / "extrinsics.json")) extrinsic_ = read_extrinsics(dir / "extrinsics.json");
}

DatasetView DiskDataset::view(const PipelineConfig& cfg) const {
  DatasetView v;
  v.spinning = spinning_.get();
  v.solid = solid_.get();
  v.imu = &imu_;
  v.external_odometry = odometry_ ? &*odometry_ : nullptr;
  v.extrinsic = cfg.extrinsic.value_or(extrinsic_);
  return v;
}

Trajectory run_odometry(const DatasetView& data, const PipelineConfig& cfg) {
  check_view(data);
  if (data.external_odometry != nullptr) {
    if (data.external_odometry->empty()) throw Error(ErrorCode::NoData, "external odometry is empty");
    spdlog::info("odometry: using {} external poses", data.external_odometry->size());
    return *data.external_odometry;
  }
  return incremental_odometry(*data.spinning, cfg.odometry);
}

MapBuildResult build_map(const DatasetView& data, const Trajectory& odometry, const PipelineConfig& cfg) {
  check_view(data);
  cfg.validate();
  if (odometry.empty()) throw Error(ErrorCode::NoData, "map building needs odometry poses");
  MapBuildResult r;
  r.segments = detect_stationary_segments(*data.imu, &odometry, cfg.thresholds);
  spdlog::info("build-map: {} stationary segments", r.segments.size());

  std::size_t next_solid = 0, next_spin = 0;
  for (const Segment& seg : r.segments) {
    std::vector<PointCloud> frames;
    while (next_solid < data.solid->size() && data.solid->stamp(next_solid) < seg.start) ++next_solid;
    for (; next_solid < data.solid->size() && data.solid->stamp(next_solid) <= seg.end; ++next_solid) {
      PointCloud f = transform_cloud(data.solid->at(next_solid), data.extrinsic);
      f.frame_id = "body";
      frames.push_back(std::move(f));
    }
    if (cfg.submap_include_spinning) {
      while (next_spin < data.spinning->size() && data.spinning->stamp(next_spin) < seg.start) ++next_spin;
      for (; next_spin < data.spinning->size() && data.spinning->stamp(next_spin) <= seg.end; ++next_spin) {
        frames.push_back(data.spinning->at(next_spin));
      }
      std::stable_sort(frames.begin(), frames.end(),
                       [](const PointCloud& a, const PointCloud& b) { return a.stamp < b.stamp; });
    }
    if (frames.empty()) {
      spdlog::warn("build-map: segment [{:.3f}, {:.3f}] holds no frames; ignored", seg.start, seg.end);
      continue;
    }
    // Algorithm-style: the SLAM pose when the platform starts moving again,
    // i.e. the last odometry pose inside the segment.
    std::size_t k = odometry.nearest_index(seg.end);
    if (odometry[k].stamp() > seg.end && k > 0 && odometry[k - 1].stamp() >= seg.start) --k;
    r.submaps.push_back(integrate_submap(frames, odometry[k]));
  }
  if (r.submaps.empty()) {
    throw Error(ErrorCode::ZeroSegments, "no stationary segment found; cannot build a prior map");
  }

  r.merged = build_prior_map(r.submaps, cfg);
  r.map = denoise_map(r.merged, cfg, &r.denoise);
  for (auto& s : r.submaps) s.cloud = PointCloud{};
  r.merged.cloud = PointCloud{};
  r.map.cloud.frame_id = "map";
  return r;
}

Trajectory localize(const NdtGrid& grid, const ScanSequence& spinning, const Pose& init,
                    const PipelineConfig& cfg, const Trajectory* odometry) {
  return track_sequence(grid, spinning, init, cfg.ndt, odometry);
}

GroundTruthResult run_ground_truth(const DatasetView& data, const PipelineConfig& cfg) {
  check_view(data);
  cfg.validate();
  GroundTruthResult out;
  Stopwatch clock;
  out.odometry = run_odometry(data, cfg);
  out.timing.emplace_back("odometry", clock.lap());
  out.map = build_map(data, out.odometry, cfg);
  out.timing.emplace_back("build_map", clock.lap());
  out.grid = build_grid(out.map.map.cloud, cfg.ndt,
                        centered_grid_origin(out.map.map.cloud, cfg.ndt.cell_size));
  out.timing.emplace_back("build_grid", clock.lap());
  const Pose init = out.odometry[out.odometry.nearest_index(data.spinning->stamp(0))];
  out.ground_truth = localize(out.grid, *data.spinning, init, cfg, &out.odometry);
  out.timing.emplace_back("localize", clock.lap());
  return out;
}

json tool_info() { return {{"name", "gtforge"}, {"version", GTFORGE_VERSION}}; }

json map_report(const MapBuildResult& r, const Trajectory& odometry, bool external_odometry) {
  json segments = json::array();
  for (const auto& s : r.segments) {
    segments.push_back({{"start", s.start}, {"end", s.end}, {"duration", s.duration()}});
  }
  json merges = json::array();
  for (const auto& m : r.map.merge_report) merges.push_back(to_json(m));
  return {
      {"segments", segments},
      {"submaps", r.submaps.size()},
      {"submaps_merged", r.map.submap_count},
      {"merge_report", merges},
      {"denoise",
       {{"points_before", r.denoise.before},
        {"points_after", r.denoise.after},
        {"removed", r.denoise.before - r.denoise.after},
        {"skipped", r.denoise.skipped}}},
      {"map_points", r.map.cloud.size()},
      {"odometry",
       {{"source", external_odometry ? "external" : "incremental_gicp"},
        {"poses", odometry.size()},
        {"degraded", odometry.degraded_count()}}},
  };
}

json dataset_report(const DatasetView& view) {
  return {{"spinning_scans", view.spinning->size()},
          {"solid_scans", view.solid->size()},
          {"imu_samples", view.imu->size()},
          {"external_odometry", view.external_odometry != nullptr},
          {"extrinsic", pose_to_json(view.extrinsic)}};
}

json localization_report(const Trajectory& gt, const NdtGrid& grid) {
  return {{"poses", gt.size()},
          {"degraded", gt.degraded_count()},
          {"t_first", gt.empty() ? 0.0 : gt.front().stamp()},
          {"t_last", gt.empty() ? 0.0 : gt.back().stamp()},
          {"grid_cells", grid.size()},
          {"cell_size", grid.cell_size()}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

void update_report(const fs::path& path, const std::string& key, const json& section) {
  json report = fs::exists(path) ? read_json(path) : json::object();
  if (!report.is_object()) report = json::object();
  report["tool"] = tool_info();
  report[key] = section;
  write_json(path, report);
}

GroundTruthResult generate_ground_truth(const fs::path& dataset_dir, const fs::path& out_dir,
                                        const PipelineConfig& cfg) {
  const DiskDataset ds(dataset_dir);
  const DatasetView view = ds.view(cfg);
  GroundTruthResult r = run_ground_truth(view, cfg);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  write_pcd(out_dir / "prior_map.pcd", r.map.map.cloud);
  write_tum(out_dir / "slam_odometry.tum", r.odometry);
  write_tum(out_dir / "ground_truth.tum", r.ground_truth);
  write_grid(out_dir / "ndt_grid.bin", r.grid);

  json report = {
      {"tool", tool_info()},
      {"config", to_json(cfg)},
      {"dataset", dataset_report(view)},
      {"map", map_report(r.map, r.odometry, view.external_odometry != nullptr)},
      {"localization", localization_report(r.ground_truth, r.grid)},
      {"timing_file", "timing.json"},
  };
  write_json(out_dir / "report.json", report);

  json timing = json::object();
  for (const auto& [stage, seconds] : r.timing) timing[stage] = seconds;
  write_json(out_dir / "timing.json", {{"stages_seconds", timing}});
  return r;
}

}  // namespace gtforge
