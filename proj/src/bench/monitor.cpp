#include "gtforge/bench/monitor.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "gtforge/error.hpp"

namespace gtforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ProcStat {
  pid_t pid = 0;
  pid_t ppid = 0;
  double cpu = 0.0;  // own user + system plus that of reaped children, seconds
};

std::optional<ProcStat> read_stat(pid_t pid) {
  std::ifstream in(fmt::format("/proc/{}/stat", pid));
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  const auto close = line.rfind(')');  // comm may contain spaces
  if (close == std::string::npos || close + 2 > line.size()) return std::nullopt;
  std::istringstream ss(line.substr(close + 2));
  std::string field;
  ProcStat st;
  st.pid = pid;
  unsigned long long ticks = 0;
  for (int i = 3; i <= 17 && ss >> field; ++i) {
    if (i == 4) st.ppid = static_cast<pid_t>(std::stol(field));
    if (i >= 14) ticks += std::stoull(field);  // utime, stime, cutime, cstime
  }
  st.cpu = static_cast<double>(ticks) / static_cast<double>(sysconf(_SC_CLK_TCK));
  return st;
}

// VmRSS and VmHWM in MB; zero when absent (zombies).
std::pair<double, double> read_rss_mb(pid_t pid) {
  std::ifstream in(fmt::format("/proc/{}/status", pid));
  std::string key;
  double rss = 0.0, hwm = 0.0;
  while (in >> key) {
    if (key == "VmRSS:") {
      in >> rss;
    } else if (key == "VmHWM:") {
      in >> hwm;
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return {rss / 1024.0, hwm / 1024.0};
}

// The child and all its live descendants.
std::vector<ProcStat> process_tree(pid_t root) {
  std::vector<ProcStat> all;
  for (const auto& entry : std::filesystem::directory_iterator("/proc")) {
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
    if (auto st = read_stat(static_cast<pid_t>(std::stol(name)))) all.push_back(*st);
  }
  std::vector<ProcStat> tree;
  std::vector<pid_t> frontier{root};
  while (!frontier.empty()) {
    const pid_t p = frontier.back();
    frontier.pop_back();
    for (const auto& st : all) {
      if (st.pid == p) tree.push_back(st);
      if (st.ppid == p) frontier.push_back(st.pid);
    }
  }
  return tree;
}

struct TreeUsage {
  double cpu = -1.0;  // negative when the child is gone
  double rss = 0.0;
  double hwm = 0.0;
};

TreeUsage tree_usage(pid_t root) {
  TreeUsage u;
  for (const auto& st : process_tree(root)) {
    u.cpu = std::max(u.cpu, 0.0) + st.cpu;
    const auto [rss, hwm] = read_rss_mb(st.pid);
    u.rss += rss;
    u.hwm = std::max(u.hwm, hwm);
  }
  return u;
}

bool has_exited(pid_t pid) {
  siginfo_t info{};
  if (waitid(P_PID, static_cast<id_t>(pid), &info, WEXITED | WNOHANG | WNOWAIT) != 0) return true;
  return info.si_pid == pid;
}

}  // namespace

ResourceTrace monitor_process(const std::vector<std::string>& command, double sample_period) {
  if (command.empty()) throw Error(ErrorCode::InvalidArgument, "no command to monitor");
  if (!(sample_period > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_period must be positive");

  std::vector<char*> argv;
  for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  // exec failures are reported through a close-on-exec pipe.
  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::Io, fmt::format("pipe: {}", std::strerror(errno)));

  ResourceTrace trace;
  trace.command = command;
  trace.sample_period = sample_period;
  const auto t0 = Clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(ErrorCode::Io, fmt::format("fork: {}", std::strerror(errno)));
  }
  if (pid == 0) {
    close(fds[0]);
    execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] const auto n = write(fds[1], &err, sizeof err);
    _exit(127);
  }
  close(fds[1]);
  int exec_errno = 0;
  const ssize_t got = read(fds[0], &exec_errno, sizeof exec_errno);
  close(fds[0]);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    waitpid(pid, nullptr, 0);
    throw Error(ErrorCode::Io, fmt::format("cannot start '{}': {}", command.front(), std::strerror(exec_errno)));
  }

  double last_t = 0.0, last_cpu = std::max(0.0, tree_usage(pid).cpu);
  const auto poll = std::chrono::duration<double>(std::min(sample_period, 0.01));
  double next = sample_period;
  bool exited = false;
  while (!exited) {
    while (seconds_since(t0) < next) {
      if (has_exited(pid)) {
        exited = true;
        break;
      }
      std::this_thread::sleep_for(poll);
    }
    // A zombie still reports its final CPU time, so the last (partial)
    // interval is sampled too.
    const double t = seconds_since(t0);
    const TreeUsage u = tree_usage(pid);
    trace.peak_rss_mb = std::max({trace.peak_rss_mb, u.rss, u.hwm});
    if (u.cpu >= 0.0 && t > last_t) {
      if (!exited || t - last_t >= 0.5 * sample_period) {
        ResourceSample s;
        s.t = t;
        s.cpu_percent = std::max(0.0, 100.0 * (u.cpu - last_cpu) / (t - last_t));
        s.rss_mb = u.rss > 0.0 || trace.samples.empty() ? u.rss : trace.samples.back().rss_mb;
        trace.samples.push_back(s);
      }
      last_t = t;
      last_cpu = u.cpu;
      trace.cpu_time = u.cpu;
    }
    next += sample_period;
  }

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  trace.wall_time = seconds_since(t0);
  if (WIFEXITED(status)) {
    trace.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    trace.term_signal = WTERMSIG(status);
  }
  return trace;
}

ResourceSummary summarize(const ResourceTrace& trace, const Trajectory* poses) {
  ResourceSummary s;
  for (const auto& x : trace.samples) {
    s.cpu_mean += x.cpu_percent;
    s.ram_mean += x.rss_mb;
  }
  if (!trace.samples.empty()) {
    s.cpu_mean /= static_cast<double>(trace.samples.size());
    s.ram_mean /= static_cast<double>(trace.samples.size());
  }
  s.ram_peak = trace.peak_rss_mb;
  if (poses != nullptr && poses->size() >= 2 && trace.wall_time > 0.0) {
    s.pose_rate = measure_pose_rate(*poses, trace.wall_time);
    s.replay_factor = (poses->back().stamp() - poses->front().stamp()) / trace.wall_time;
  }
  return s;
}

double measure_pose_rate(std::size_t pose_count, double wall_duration) {
  if (pose_count < 2) {
    throw Error(ErrorCode::InsufficientData, fmt::format("pose rate needs at least 2 poses, got {}", pose_count));
  }
  if (!(wall_duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "wall duration must be positive");
  return static_cast<double>(pose_count) / wall_duration;
}

double measure_pose_rate(const Trajectory& poses, double wall_duration) {
  return measure_pose_rate(poses.size(), wall_duration);
}

void write_trace_csv(const std::filesystem::path& path, const ResourceTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << "t,cpu_percent,rss_mb\n";
  for (const auto& s : trace.samples) out << fmt::format("{:.3f},{:.2f},{:.3f}\n", s.t, s.cpu_percent, s.rss_mb);
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

nlohmann::json to_json(const ResourceTrace& trace, const ResourceSummary& summary) {
  nlohmann::json j = {{"command", trace.command},
                      {"sample_period", trace.sample_period},
                      {"samples", trace.samples.size()},
                      {"wall_time_s", trace.wall_time},
                      {"cpu_time_s", trace.cpu_time},
                      {"exit_code", trace.exit_code},
                      {"term_signal", trace.term_signal},
                      {"cpu_mean_percent", summary.cpu_mean},
                      {"cpu_convention", "100 = one full core"},
                      {"ram_mean_mb", summary.ram_mean},
                      {"ram_peak_mb", summary.ram_peak},
                      {"ram_kind", "resident set (VmRSS), MB = 2^20 bytes"}};
  if (summary.pose_rate) j["pose_rate_hz"] = *summary.pose_rate;
  if (summary.replay_factor) j["replay_factor"] = *summary.replay_factor;
  return j;
}

}  // namespace gtforge
