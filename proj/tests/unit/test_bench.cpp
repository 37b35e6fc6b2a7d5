#include <csignal>
#include <fstream>

#include <doctest.h>

#include "gtforge/bench/monitor.hpp"
#include "gtforge/error.hpp"
#include "test_support.hpp"

using namespace gtforge;
using namespace gtforge::testing;

namespace {

const std::string kHelper = GTFORGE_LOAD_HELPER;

double mean_cpu_after_warmup(const ResourceTrace& t) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : t.samples) {
    if (s.t < 0.5) continue;  // first interval includes process start-up
    sum += s.cpu_percent;
    ++n;
  }
  return n ? sum / n : 0.0;
}

}  // namespace

TEST_CASE("idle child uses no cpu") {
  const ResourceTrace t = monitor_process({kHelper, "sleep", "2"}, 0.25);
  CHECK(t.exit_code == 0);
  CHECK(!t.crashed());
  CHECK(t.wall_time == doctest::Approx(2.0).epsilon(0.25));
  REQUIRE(t.samples.size() >= 4);
  CHECK(mean_cpu_after_warmup(t) < 5.0);
  CHECK(t.cpu_time < 0.1);
}

TEST_CASE("busy child saturates one core") {
  const ResourceTrace t = monitor_process({kHelper, "busy", "3"}, 0.25);
  CHECK(t.exit_code == 0);
  const double cpu = mean_cpu_after_warmup(t);
  CHECK(cpu >= 90.0);
  CHECK(cpu <= 110.0);
  CHECK(t.cpu_time == doctest::Approx(3.0).epsilon(0.15));

  // samples are taken on the requested period
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    CHECK(t.samples[i].t - t.samples[i - 1].t == doctest::Approx(0.25).epsilon(0.4));
  }

  const ResourceSummary s = summarize(t);
  CHECK(s.cpu_mean >= 80.0);
  CHECK(!s.pose_rate.has_value());
}

TEST_CASE("descendants are included") {
  const ResourceTrace t = monitor_process({"/bin/sh", "-c", kHelper + " busy 2"}, 0.25);
  CHECK(t.exit_code == 0);
  CHECK(mean_cpu_after_warmup(t) >= 85.0);
}

TEST_CASE("resident memory of an allocating child") {
  const ResourceTrace t = monitor_process({kHelper, "alloc", "200", "2"}, 0.25);
  CHECK(t.exit_code == 0);
  CHECK(t.peak_rss_mb >= 200.0);
  CHECK(t.peak_rss_mb < 260.0);
  const ResourceSummary s = summarize(t);
  CHECK(s.ram_peak == t.peak_rss_mb);
  CHECK(s.ram_mean <= s.ram_peak);
}

TEST_CASE("exit codes, crashes and spawn failures") {
  const ResourceTrace bad = monitor_process({kHelper, "bogus", "1"}, 0.1);
  CHECK(bad.exit_code == 2);
  CHECK(!bad.crashed());

  const ResourceTrace crash = monitor_process({"/bin/sh", "-c", "sleep 0.5; kill -SEGV $$"}, 0.1);
  CHECK(crash.crashed());
  CHECK(crash.term_signal == SIGSEGV);
  CHECK(!crash.samples.empty());

  try {
    monitor_process({"/definitely/not/a/program"}, 0.1);
    FAIL("spawn should fail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  CHECK_THROWS_AS(monitor_process({}, 0.1), Error);
}

TEST_CASE("pose rate") {
  CHECK(measure_pose_rate(100, 10.0) == 10.0);
  CHECK_THROWS_AS(measure_pose_rate(1, 10.0), Error);

  std::mt19937_64 rng(1);
  const Trajectory traj = random_trajectory(rng, 51);  // 5 s of poses
  CHECK(measure_pose_rate(traj, 2.5) == doctest::Approx(51.0 / 2.5));

  ResourceTrace t;
  t.wall_time = 2.5;
  t.samples = {{0.5, 50.0, 10.0}, {1.0, 100.0, 20.0}};
  t.peak_rss_mb = 20.0;
  const ResourceSummary s = summarize(t, &traj);
  CHECK(s.cpu_mean == 75.0);
  CHECK(s.ram_mean == 15.0);
  REQUIRE(s.replay_factor.has_value());
  CHECK(*s.replay_factor == doctest::Approx(5.0 / 2.5));
}

TEST_CASE("trace outputs") {
  ResourceTrace t;
  t.command = {"x"};
  t.wall_time = 1.0;
  t.samples = {{0.5, 10.0, 1.0}, {1.0, 20.0, 2.0}};
  t.peak_rss_mb = 2.0;
  t.exit_code = 0;
  const auto dir = scratch_dir("trace");
  write_trace_csv(dir / "trace.csv", t);
  std::ifstream in(dir / "trace.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.find("cpu") != std::string::npos);
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 2);
  const auto j = to_json(t, summarize(t));
  CHECK(j.dump().find("cpu") != std::string::npos);
  std::filesystem::remove_all(dir);
}
