#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "gtforge/eval/ape.hpp"
#include "gtforge/pipeline/config.hpp"
#include "gtforge/sim/lidar.hpp"

namespace gtforge::cli {

struct SimulationOptions {
  std::string preset = "room_10x8x3";
  sim::SensorSpec spinning = sim::sensor_preset("vlp16");
  sim::SensorSpec solid = sim::sensor_preset("avia");
  double imu_rate = 200.0;
  double noise_accel = 0.001;
  double noise_gyro = 0.001;
  double stationary_duration = 0.0;  // > 0 replaces the preset script by one stop
};

struct EvaluationOptions {
  ApeOptions ape;
  std::optional<Pose> reference_extrinsic;          // applied to the estimate first
  std::optional<std::pair<double, double>> stationary_window;
};

struct OutputNames {
  std::string report = "report.json";
  std::string ape_csv = "ape.csv";
  std::string trace_csv = "resource_trace.csv";
  std::string monitor_summary = "monitor.json";  // kept out of the report: wall-clock values
};

/// One JSON document for every subcommand; each reads the sections it needs.
/// Top-level keys: pipeline, simulation, evaluation, monitor, outputs.
struct RunConfig {
  PipelineConfig pipeline;
  SimulationOptions simulation;
  EvaluationOptions evaluation;
  double monitor_period = 0.5;
  OutputNames outputs;
};

/// Unknown keys or wrong types throw InvalidArgument before any work starts.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace gtforge::cli
