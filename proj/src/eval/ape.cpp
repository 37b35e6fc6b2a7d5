#include "gtforge/eval/ape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>

#include "gtforge/error.hpp"
#include "gtforge/geom/pose_json.hpp"
#include "gtforge/geom/rigid_fit.hpp"

namespace gtforge {

Association associate_timestamps(const Trajectory& est, const Trajectory& ref, double max_dt) {
  if (est.empty() || ref.empty()) throw Error(ErrorCode::NoData, "association needs two non-empty trajectories");
  if (!(max_dt >= 0.0)) throw Error(ErrorCode::InvalidArgument, "max_dt must be non-negative");

  struct Candidate {
    double dt;
    std::size_t e, r;
  };
  std::vector<Candidate> cand;
  std::size_t lo = 0;
  for (std::size_t e = 0; e < est.size(); ++e) {
    const double t = est[e].stamp();
    while (lo < ref.size() && ref[lo].stamp() < t - max_dt) ++lo;
    for (std::size_t r = lo; r < ref.size() && ref[r].stamp() <= t + max_dt; ++r) {
      cand.push_back({std::abs(ref[r].stamp() - t), e, r});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.e, a.r) < std::tie(b.dt, b.e, b.r);
  });

  std::vector<bool> used_e(est.size()), used_r(ref.size());
  Association out;
  for (const auto& c : cand) {
    if (used_e[c.e] || used_r[c.r]) continue;
    used_e[c.e] = used_r[c.r] = true;
    out.emplace_back(c.e, c.r);
  }
  if (out.empty()) {
    throw Error(ErrorCode::NoAssociation,
                fmt::format("no timestamps pair up within max_dt = {} s", max_dt));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Trajectory apply_reference_transform(const Trajectory& traj, const Pose& extrinsic) {
  const Pose inv = extrinsic.inverse();
  Trajectory out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.push_back((extrinsic * traj[i] * inv).with_stamp(traj[i].stamp()), traj.degraded(i));
  }
  return out;
}

Pose umeyama_alignment(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& ref) {
  if (est.size() != ref.size()) throw Error(ErrorCode::InvalidArgument, "alignment needs paired positions");
  return fit_rigid_transform(est, ref);
}

std::string to_string(Alignment a) { return a == Alignment::Umeyama ? "umeyama" : "none"; }

Alignment alignment_from_string(const std::string& s) {
  if (s == "none") return Alignment::None;
  if (s == "umeyama") return Alignment::Umeyama;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown alignment '{}' (none, umeyama)", s));
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace

ApeStats compute_ape(const Trajectory& est, const Trajectory& ref, const ApeOptions& opts) {
  const Association pairs = associate_timestamps(est, ref, opts.max_dt);
  ApeStats s;
  if (opts.align == Alignment::Umeyama) {
    std::vector<Eigen::Vector3d> a, b;
    for (const auto& [e, r] : pairs) {
      a.push_back(est[e].translation());
      b.push_back(ref[r].translation());
    }
    s.alignment = umeyama_alignment(a, b);
  }

  std::vector<double> err;
  err.reserve(pairs.size());
  double sum = 0.0, sq = 0.0, rot_sum = 0.0, rot_sq = 0.0, rot_max = 0.0;
  for (const auto& [e, r] : pairs) {
    const Pose p = s.alignment * est[e];
    PoseError pe;
    pe.t = est[e].stamp();
    pe.translation = (ref[r].translation() - p.translation()).norm();
    if (opts.rotation) {
      pe.rotation = so3_log(ref[r].rotation().conjugate() * p.rotation()).norm();
      rot_sum += pe.rotation;
      rot_sq += pe.rotation * pe.rotation;
      rot_max = std::max(rot_max, pe.rotation);
    }
    s.per_pose.push_back(pe);
    err.push_back(pe.translation);
    sum += pe.translation;
    sq += pe.translation * pe.translation;
    s.max = std::max(s.max, pe.translation);
  }
  const double n = static_cast<double>(err.size());
  s.mean = sum / n;
  double var = 0.0;
  for (double x : err) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / n);
  // identical errors: avoid the rounding residue of sum / n
  if (std::all_of(err.begin(), err.end(), [&](double x) { return x == err.front(); })) {
    s.mean = err.front();
    s.std = 0.0;
  }
  s.rmse = std::sqrt(sq / n);
  s.median = median_of(err);
  if (opts.rotation) {
    s.rotation_mean = rot_sum / n;
    s.rotation_rmse = std::sqrt(rot_sq / n);
    s.rotation_max = rot_max;
  }
  return s;
}

AxisDeviation stationary_deviation(const Trajectory& gt, double t0, double t1) {
  std::vector<Eigen::Vector3d> pts;
  for (const auto& p : gt) {
    if (p.stamp() >= t0 && p.stamp() <= t1) pts.push_back(p.translation());
  }
  if (pts.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("{} poses in [{}, {}]; need at least 2", pts.size(), t0, t1));
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& p : pts) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(pts.size());
  AxisDeviation d;
  d.std = var.cwiseSqrt();
  d.overall = std::sqrt(var.sum());
  return d;
}

nlohmann::json to_json(const ApeStats& s, const ApeOptions& opts) {
  nlohmann::json j = {{"units", "m"},
                      {"std_kind", "population"},
                      {"align", to_string(opts.align)},
                      {"max_dt", opts.max_dt},
                      {"pairs", s.per_pose.size()},
                      {"mean", s.mean},
                      {"std", s.std},
                      {"rmse", s.rmse},
                      {"median", s.median},
                      {"max", s.max}};
  if (opts.align == Alignment::Umeyama) j["alignment"] = pose_to_json(s.alignment);
  if (s.rotation_mean) {
    j["rotation"] = {{"units", "rad"}, {"mean", *s.rotation_mean}, {"rmse", *s.rotation_rmse},
                     {"max", *s.rotation_max}};
  }
  return j;
}

nlohmann::json to_json(const AxisDeviation& d) {
  return {{"units", "m"}, {"std_xyz", {d.std.x(), d.std.y(), d.std.z()}}, {"overall", d.overall}};
}

void write_ape_csv(const std::filesystem::path& path, const ApeStats& s, bool rotation) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << (rotation ? "t,error_m,rotation_error_rad\n" : "t,error_m\n");
  for (const auto& e : s.per_pose) {
    if (rotation) {
      out << fmt::format("{:.9f},{:.9f},{:.9f}\n", e.t, e.translation, e.rotation);
    } else {
      out << fmt::format("{:.9f},{:.9f}\n", e.t, e.translation);
    }
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace gtforge
