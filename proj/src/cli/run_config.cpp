#include "gtforge/cli/run_config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pose_json.hpp"
#include "gtforge/json_reader.hpp"
#include "gtforge/sim/dataset.hpp"
#include "gtforge/sim/scene.hpp"

namespace gtforge::cli {

using nlohmann::json;

namespace {

// Re-tags parse errors from nested readers as usage errors with a path.
template <typename F>
auto usage_errors(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw;
    throw Error(ErrorCode::InvalidArgument, fmt::format("'{}': {}", path, e.what()));
  }
}

void read_simulation(const json& j, const std::string& path, SimulationOptions& s) {
  JsonReader(j, path)
      .field("preset", s.preset)
      .object("sensors",
              [&](const json& sj, const std::string& sp) {
                JsonReader(sj, sp)
                    .object("spinning",
                            [&](const json& v, const std::string& p) {
                              s.spinning = usage_errors(p, [&] { return sim::sensor_spec_from_json(v); });
                            })
                    .object("solid",
                            [&](const json& v, const std::string& p) {
                              s.solid = usage_errors(p, [&] { return sim::sensor_spec_from_json(v); });
                            })
                    .finish();
              })
      .field("imu_rate", s.imu_rate)
      .field("noise_accel", s.noise_accel)
      .field("noise_gyro", s.noise_gyro)
      .field("stationary_duration", s.stationary_duration)
      .finish();
  const auto presets = sim::scene_presets();
  if (std::find(presets.begin(), presets.end(), s.preset) == presets.end()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("'{}.preset': unknown scene '{}'", path, s.preset));
  }
  if (s.spinning.kind != sim::SensorKind::Spinning || s.solid.kind != sim::SensorKind::SolidState) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("'{}.sensors': spinning must be a spinning sensor and solid a solid-state one", path));
  }
  if (!(s.imu_rate > 0.0) || !(s.noise_accel >= 0.0) || !(s.noise_gyro >= 0.0) || !(s.stationary_duration >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("'{}': imu_rate must be positive; noise and stationary_duration non-negative", path));
  }
}

void read_evaluation(const json& j, const std::string& path, EvaluationOptions& e) {
  std::string align = to_string(e.ape.align);
  JsonReader r(j, path);
  r.field("align", align)
      .field("max_dt", e.ape.max_dt)
      .field("rotation", e.ape.rotation)
      .object("reference_extrinsic",
              [&](const json& v, const std::string& p) {
                e.reference_extrinsic = usage_errors(p, [&] { return pose_from_json(v); });
              })
      .object("stationary_window", [&](const json& v, const std::string& p) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
          throw Error(ErrorCode::InvalidArgument, fmt::format("'{}' must be [t0, t1]", p));
        }
        e.stationary_window = std::make_pair(v[0].get<double>(), v[1].get<double>());
      });
  r.finish();
  e.ape.align = alignment_from_string(align);
  if (!(e.ape.max_dt >= 0.0)) throw Error(ErrorCode::InvalidArgument, fmt::format("'{}.max_dt' must be >= 0", path));
  if (e.stationary_window && !(e.stationary_window->second > e.stationary_window->first)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("'{}.stationary_window' needs t0 < t1", path));
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  JsonReader(j, "config")
      .object("pipeline", [&](const json& v, const std::string&) { c.pipeline = pipeline_config_from_json(v); })
      .object("simulation", [&](const json& v, const std::string& p) { read_simulation(v, p, c.simulation); })
      .object("evaluation", [&](const json& v, const std::string& p) { read_evaluation(v, p, c.evaluation); })
      .object("monitor",
              [&](const json& v, const std::string& p) {
                JsonReader(v, p).field("sample_period", c.monitor_period).finish();
                if (!(c.monitor_period > 0.0)) {
                  throw Error(ErrorCode::InvalidArgument, fmt::format("'{}.sample_period' must be positive", p));
                }
              })
      .object("outputs",
              [&](const json& v, const std::string& p) {
                JsonReader(v, p)
                    .field("report", c.outputs.report)
                    .field("ape_csv", c.outputs.ape_csv)
                    .field("trace_csv", c.outputs.trace_csv)
                    .field("monitor_summary", c.outputs.monitor_summary)
                    .finish();
              })
      .finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingInput, fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  json eval = {{"align", to_string(c.evaluation.ape.align)},
               {"max_dt", c.evaluation.ape.max_dt},
               {"rotation", c.evaluation.ape.rotation}};
  if (c.evaluation.reference_extrinsic) eval["reference_extrinsic"] = pose_to_json(*c.evaluation.reference_extrinsic);
  if (c.evaluation.stationary_window) {
    eval["stationary_window"] = {c.evaluation.stationary_window->first, c.evaluation.stationary_window->second};
  }
  return {{"pipeline", to_json(c.pipeline)},
          {"simulation",
           {{"preset", c.simulation.preset},
            {"sensors", {{"spinning", sim::to_json(c.simulation.spinning)}, {"solid", sim::to_json(c.simulation.solid)}}},
            {"imu_rate", c.simulation.imu_rate},
            {"noise_accel", c.simulation.noise_accel},
            {"noise_gyro", c.simulation.noise_gyro},
            {"stationary_duration", c.simulation.stationary_duration}}},
          {"evaluation", eval},
          {"monitor", {{"sample_period", c.monitor_period}}},
          {"outputs",
           {{"report", c.outputs.report}, {"ape_csv", c.outputs.ape_csv}, {"trace_csv", c.outputs.trace_csv},
            {"monitor_summary", c.outputs.monitor_summary}}}};
}

}  // namespace gtforge::cli
