#include "gtforge/cli/app.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "gtforge/bench/monitor.hpp"
#include "gtforge/cli/run_config.hpp"
#include "gtforge/error.hpp"
#include "gtforge/eval/ape.hpp"
#include "gtforge/geom/pcd_io.hpp"
#include "gtforge/log.hpp"
#include "gtforge/ndt/ndt.hpp"
#include "gtforge/pipeline/ground_truth.hpp"
#include "gtforge/sim/dataset.hpp"
#include "gtforge/sim/scene.hpp"

namespace gtforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
  std::string config;
  std::uint64_t seed = 0;
  std::string in;
  std::string out;
  std::string est;
  std::string ref;
  std::string align;
  std::optional<double> max_dt;
  std::string preset;
  std::optional<double> stationary;
  std::string odometry;
  std::vector<double> window;
  std::optional<double> period;
  std::string poses;
  std::vector<std::string> command;
};

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

RunConfig load(const Args& a) { return a.config.empty() ? RunConfig{} : load_run_config(a.config); }

fs::path out_dir(const Args& a) {
  const fs::path dir = a.out.empty() ? fs::path(a.in) : fs::path(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  return dir;
}

// Wall-clock figures live beside the report so the report stays reproducible.
void record_timing(const fs::path& dir, const std::string& stage, double seconds) {
  const fs::path path = dir / "timing.json";
  json t = fs::exists(path) ? read_json(path) : json::object();
  if (!t.is_object()) t = json::object();
  t["stages_seconds"][stage] = seconds;
  write_json(path, t);
}

void start_report(const fs::path& path, const RunConfig& rc) {
  update_report(path, "config", to_json(rc));
  update_report(path, "timing_file", "timing.json");
}

int cmd_simulate(const Args& a) {
  RunConfig rc = load(a);
  if (!a.preset.empty()) rc.simulation.preset = a.preset;
  if (a.stationary) rc.simulation.stationary_duration = *a.stationary;
  sim::SimulationSetup s = sim::default_setup(rc.simulation.preset, a.seed);
  s.spinning = rc.simulation.spinning;
  s.solid = rc.simulation.solid;
  s.imu_rate = rc.simulation.imu_rate;
  s.noise_accel = rc.simulation.noise_accel;
  s.noise_gyro = rc.simulation.noise_gyro;
  if (rc.simulation.stationary_duration > 0.0) {
    s.script = sim::MotionScript::Builder(s.script.waypoints().front().pose)
                   .hold(rc.simulation.stationary_duration)
                   .build();
  }
  sim::export_dataset(s, a.out);
  fmt::print("simulated {} ({:.1f} s, seed {}) -> {}\n", s.scene, s.script.duration(), a.seed, a.out);
  return 0;
}

int cmd_odometry(const Args& a) {
  const RunConfig rc = load(a);
  const DiskDataset ds(a.in);
  const DatasetView view = ds.view(rc.pipeline);
  Stopwatch clock;
  const Trajectory odo = run_odometry(view, rc.pipeline);
  const double secs = clock.lap();
  const fs::path dir = out_dir(a);
  write_tum(dir / "slam_odometry.tum", odo);
  const fs::path report = dir / rc.outputs.report;
  start_report(report, rc);
  update_report(report, "odometry",
                {{"source", view.external_odometry ? "external" : "incremental_gicp"},
                 {"poses", odo.size()},
                 {"degraded", odo.degraded_count()}});
  record_timing(dir, "odometry", secs);
  fmt::print("odometry: {} poses ({} degraded) -> {}\n", odo.size(), odo.degraded_count(),
             (dir / "slam_odometry.tum").string());
  return 0;
}

int cmd_build_map(const Args& a) {
  const RunConfig rc = load(a);
  const DiskDataset ds(a.in);
  DatasetView view = ds.view(rc.pipeline);
  std::optional<Trajectory> given;
  if (!a.odometry.empty()) {
    given = read_tum(a.odometry);
    view.external_odometry = &*given;
  }
  Stopwatch clock;
  const Trajectory odo = run_odometry(view, rc.pipeline);
  const double t_odo = clock.lap();
  const MapBuildResult r = build_map(view, odo, rc.pipeline);
  const double t_map = clock.lap();

  const fs::path dir = out_dir(a);
  write_pcd(dir / "prior_map.pcd", r.map.cloud);
  write_tum(dir / "slam_odometry.tum", odo);
  const fs::path report = dir / rc.outputs.report;
  start_report(report, rc);
  update_report(report, "dataset", dataset_report(view));
  update_report(report, "map", map_report(r, odo, view.external_odometry != nullptr));
  record_timing(dir, "odometry", t_odo);
  record_timing(dir, "build_map", t_map);
  fmt::print("build-map: {} segments, {}/{} submaps merged, {} map points -> {}\n", r.segments.size(),
             r.map.submap_count, r.submaps.size(), r.map.cloud.size(), (dir / "prior_map.pcd").string());
  return 0;
}

int cmd_localize(const Args& a) {
  const RunConfig rc = load(a);
  const DiskDataset ds(a.in);
  const fs::path dir = out_dir(a);
  const fs::path map_path = dir / "prior_map.pcd";
  if (!fs::exists(map_path)) {
    throw Error(ErrorCode::MissingInput, fmt::format("missing {} (run build-map first)", map_path.string()));
  }
  Stopwatch clock;
  const PointCloud map = read_pcd(map_path);
  const NdtGrid grid = build_grid(map, rc.pipeline.ndt, centered_grid_origin(map, rc.pipeline.ndt.cell_size));
  const double t_grid = clock.lap();

  // The map frame is the odometry frame, so tracking starts at the odometry
  // pose of the first scan.
  Pose init;
  std::optional<Trajectory> odo;
  if (fs::exists(dir / "slam_odometry.tum")) {
    odo = read_tum(dir / "slam_odometry.tum");
  } else if (ds.external_odometry()) {
    odo = *ds.external_odometry();
  }
  if (odo && !odo->empty()) {
    init = (*odo)[odo->nearest_index(ds.spinning().stamp(0))];
  } else {
    spdlog::warn("localize: no odometry found; starting from the identity pose");
  }
  const Trajectory gt = localize(grid, ds.spinning(), init, rc.pipeline, odo ? &*odo : nullptr);
  const double t_loc = clock.lap();

  write_grid(dir / "ndt_grid.bin", grid);
  write_tum(dir / "ground_truth.tum", gt);
  const fs::path report = dir / rc.outputs.report;
  start_report(report, rc);
  update_report(report, "localization", localization_report(gt, grid));
  record_timing(dir, "build_grid", t_grid);
  record_timing(dir, "localize", t_loc);
  fmt::print("localize: {} poses ({} degraded), {} grid cells -> {}\n", gt.size(), gt.degraded_count(), grid.size(),
             (dir / "ground_truth.tum").string());
  return 0;
}

int cmd_eval(const Args& a) {
  RunConfig rc = load(a);
  if (!a.align.empty()) rc.evaluation.ape.align = alignment_from_string(a.align);
  if (a.max_dt) rc.evaluation.ape.max_dt = *a.max_dt;
  if (!a.window.empty()) rc.evaluation.stationary_window = std::make_pair(a.window[0], a.window[1]);
  if (!(rc.evaluation.ape.max_dt >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--max-dt must be >= 0");

  const fs::path est_path = !a.est.empty() ? fs::path(a.est) : fs::path(a.in.empty() ? "." : a.in) / "ground_truth.tum";
  if (!fs::exists(est_path)) throw Error(ErrorCode::MissingInput, fmt::format("missing {}", est_path.string()));
  if (!fs::exists(a.ref)) throw Error(ErrorCode::MissingInput, fmt::format("missing {}", a.ref));
  Trajectory est = read_tum(est_path);
  const Trajectory ref = read_tum(a.ref);
  if (rc.evaluation.reference_extrinsic) est = apply_reference_transform(est, *rc.evaluation.reference_extrinsic);

  const ApeStats ape = compute_ape(est, ref, rc.evaluation.ape);
  json section = {{"estimate", est_path.filename().string()},
                  {"reference", fs::path(a.ref).filename().string()},
                  {"ape", to_json(ape, rc.evaluation.ape)}};
  if (rc.evaluation.stationary_window) {
    const auto [t0, t1] = *rc.evaluation.stationary_window;
    json dev = to_json(stationary_deviation(est, t0, t1));
    dev["window"] = {t0, t1};
    section["stationary_deviation"] = dev;
  }

  const fs::path dir = a.out.empty() ? (est_path.has_parent_path() ? est_path.parent_path() : fs::path(".")) : out_dir(a);
  write_ape_csv(dir / rc.outputs.ape_csv, ape, rc.evaluation.ape.rotation);
  const fs::path report = dir / rc.outputs.report;
  update_report(report, "evaluation", section);
  fmt::print("APE ({} pairs, align {}): mean {:.4f} m, std {:.4f} m, rmse {:.4f} m, max {:.4f} m\n",
             ape.per_pose.size(), to_string(rc.evaluation.ape.align), ape.mean, ape.std, ape.rmse, ape.max);
  if (section.contains("stationary_deviation")) {
    const auto& d = section["stationary_deviation"];
    fmt::print("stationary std: x {:.4f} y {:.4f} z {:.4f} overall {:.4f} m\n", d["std_xyz"][0].get<double>(),
               d["std_xyz"][1].get<double>(), d["std_xyz"][2].get<double>(), d["overall"].get<double>());
  }
  return 0;
}

int cmd_monitor(const Args& a) {
  const RunConfig rc = load(a);
  const double period = a.period.value_or(rc.monitor_period);
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidArgument, "--period must be positive");
  const ResourceTrace trace = monitor_process(a.command, period);
  std::optional<Trajectory> poses;
  if (!a.poses.empty()) poses = read_tum(a.poses);
  const ResourceSummary summary = summarize(trace, poses ? &*poses : nullptr);

  const fs::path dir = a.out.empty() ? fs::path(".") : out_dir(a);
  write_trace_csv(dir / rc.outputs.trace_csv, trace);
  write_json(dir / rc.outputs.monitor_summary, to_json(trace, summary));
  if (trace.crashed()) {
    spdlog::warn("monitor: child killed by signal {}; trace is partial", trace.term_signal);
  } else if (trace.exit_code != 0) {
    spdlog::warn("monitor: child exited with code {}", trace.exit_code);
  }
  fmt::print("monitor: {:.2f} s wall, cpu mean {:.1f} % (100 = one core), ram mean {:.1f} MB, peak {:.1f} MB\n",
             trace.wall_time, summary.cpu_mean, summary.ram_mean, summary.ram_peak);
  return 0;
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return 2;
    case ErrorClass::Data: return 3;
    case ErrorClass::Numerical: return 4;
  }
  return 1;
}

}  // namespace

int dispatch(int argc, char** argv) {
  init_logging();
  Args a;
  CLI::App app{"gtforge: SLAM-assisted lidar ground-truth maps, trajectories and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  auto config_opt = [&](CLI::App* s) {
    s->add_option("--config", a.config, "RunConfig JSON")->check(CLI::ExistingFile);
  };

  auto* sim = app.add_subcommand("simulate", "Render a synthetic dataset directory");
  sim->add_option("--preset", a.preset, "Scene preset")->check(CLI::IsMember(sim::scene_presets()));
  sim->add_option("--seed", a.seed, "Random seed (default 0)");
  sim->add_option("--out", a.out, "Output dataset directory")->required();
  sim->add_option("--stationary", a.stationary, "Replace the motion script by one stop of this many seconds")
      ->check(CLI::PositiveNumber);
  config_opt(sim);

  auto* odo = app.add_subcommand("odometry", "Incremental lidar odometry of the spinning scans");
  odo->add_option("--in", a.in, "Dataset directory")->required();
  odo->add_option("--out", a.out, "Output directory (default: --in)");
  config_opt(odo);

  auto* map = app.add_subcommand("build-map", "Stationary gating, submap merge and denoise into prior_map.pcd");
  map->add_option("--in", a.in, "Dataset directory")->required();
  map->add_option("--out", a.out, "Output directory (default: --in)");
  map->add_option("--odometry", a.odometry, "TUM odometry to use instead of computing it")->check(CLI::ExistingFile);
  config_opt(map);

  auto* loc = app.add_subcommand("localize", "NDT tracking of the spinning scans against prior_map.pcd");
  loc->add_option("--in", a.in, "Dataset directory")->required();
  loc->add_option("--out", a.out, "Directory holding prior_map.pcd; outputs go here (default: --in)");
  config_opt(loc);

  auto* ev = app.add_subcommand("eval", "Absolute pose error of an estimate against a reference");
  ev->add_option("--est", a.est, "Estimated TUM trajectory (default: <in>/ground_truth.tum)");
  ev->add_option("--in", a.in, "Directory holding ground_truth.tum");
  ev->add_option("--ref", a.ref, "Reference TUM trajectory")->required();
  ev->add_option("--align", a.align, "Alignment before comparing")->check(CLI::IsMember({"none", "umeyama"}));
  ev->add_option("--max-dt", a.max_dt, "Association tolerance in seconds (default 0.02)");
  ev->add_option("--stationary-window", a.window, "Report per-axis std over [T0, T1]")->expected(2);
  ev->add_option("--out", a.out, "Output directory (default: the estimate's directory)");
  config_opt(ev);

  auto* mon = app.add_subcommand("monitor", "Sample CPU and memory of a command: monitor [opts] -- cmd args...");
  mon->add_option("--period", a.period, "Sample period in seconds (default 0.5)");
  mon->add_option("--poses", a.poses, "TUM trajectory produced by the command, for the pose rate")
      ->check(CLI::ExistingFile);
  mon->add_option("--out", a.out, "Output directory (default: .)");
  mon->add_option("command", a.command, "Command and arguments")->required();
  config_opt(mon);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(a);
    if (odo->parsed()) return cmd_odometry(a);
    if (map->parsed()) return cmd_build_map(a);
    if (loc->parsed()) return cmd_localize(a);
    if (ev->parsed()) return cmd_eval(a);
    if (mon->parsed()) return cmd_monitor(a);
  } catch (const Error& e) {
    std::cerr << fmt::format("error [{}]: {}\n", to_string(e.code()), e.what());
    return exit_code(error_class(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gtforge::cli
