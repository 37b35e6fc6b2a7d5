#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtforge/eval/trajectory.hpp"

namespace gtforge {

/// cpu_percent: 100 = one full core over the interval ending at t.
/// rss_mb: resident set, 1 MB = 2^20 bytes.
struct ResourceSample {
  double t = 0.0;
  double cpu_percent = 0.0;
  double rss_mb = 0.0;
};

struct ResourceTrace {
  std::vector<ResourceSample> samples;
  std::vector<std::string> command;
  double sample_period = 0.5;
  double wall_time = 0.0;  // spawn to exit
  double cpu_time = 0.0;   // user + system seconds of the process tree
  double peak_rss_mb = 0.0;
  int exit_code = -1;      // valid when term_signal == 0
  int term_signal = 0;     // non-zero when the child was killed by a signal
  bool crashed() const { return term_signal != 0; }
};

/// Runs `command` (argv[0] looked up in PATH) and samples the CPU and memory
/// of it and all its descendants every `sample_period` seconds until it
/// exits. CPU includes descendants already reaped by their parents. A child
/// that dies on a signal still returns its partial trace. Throws Io when the
/// command cannot be started.
ResourceTrace monitor_process(const std::vector<std::string>& command, double sample_period = 0.5);

struct ResourceSummary {
  double cpu_mean = 0.0;  // %
  double ram_mean = 0.0;  // MB
  double ram_peak = 0.0;  // MB
  std::optional<double> pose_rate;      // Hz
  std::optional<double> replay_factor;  // data duration / wall time
};

/// Means over the samples. Passing the produced trajectory fills the pose
/// rate and replay factor (trajectory span over wall time).
ResourceSummary summarize(const ResourceTrace& trace, const Trajectory* poses = nullptr);

/// Pose count over wall time. Throws InsufficientData for fewer than 2 poses.
double measure_pose_rate(std::size_t pose_count, double wall_duration);
double measure_pose_rate(const Trajectory& poses, double wall_duration);

void write_trace_csv(const std::filesystem::path& path, const ResourceTrace& trace);
nlohmann::json to_json(const ResourceTrace& trace, const ResourceSummary& summary);

}  // namespace gtforge
