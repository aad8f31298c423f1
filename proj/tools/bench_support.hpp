/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

// Report writing and worker-process accounting for the benchmark commands.

namespace terc::bench {

/// One row of a benchmark report; unset optionals serialize as empty cells
/// so every report shares one column schema.
struct ReportRow {
  std::string label;
  std::optional<std::uint64_t> size_bytes;
  std::optional<double> mean_ms;
  std::optional<double> std_ms;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> peak_rss_bytes;
};

struct Report {
  std::string kind;
  std::vector<ReportRow> rows;

  [[nodiscard]] std::string to_csv() const {
    std::ostringstream out;
    out << "# kind=" << kind << " cores=" << sysconf(_SC_NPROCESSORS_ONLN) << '\n';
    out << "label,size_bytes,mean_ms,std_ms,trials,peak_rss_bytes\n";
    char buf[64];
    for (const auto& r : rows) {
      out << r.label << ',';
      if (r.size_bytes) out << *r.size_bytes;
      out << ',';
      if (r.mean_ms) {
        std::snprintf(buf, sizeof(buf), "%.3f", *r.mean_ms);
        out << buf;
      }
      out << ',';
      if (r.std_ms) {
        std::snprintf(buf, sizeof(buf), "%.3f", *r.std_ms);
        out << buf;
      }
      out << ',';
      if (r.trials) out << *r.trials;
      out << ',';
      if (r.peak_rss_bytes) out << *r.peak_rss_bytes;
      out << '\n';
    }
    return out.str();
  }
};

/// Sample mean and unbiased standard deviation in milliseconds.
struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

inline TimingStats timing_stats(const std::vector<double>& samples_ms) {
  TimingStats s;
  if (samples_ms.empty()) return s;
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  if (samples_ms.size() >= 2) {
    double ss = 0.0;
    for (double v : samples_ms) ss += (v - s.mean_ms) * (v - s.mean_ms);
    s.std_ms = std::sqrt(ss / static_cast<double>(samples_ms.size() - 1));
  }
  return s;
}

/// Peak RSS of a process in bytes, from /proc/<pid>/status VmHWM.
inline std::optional<std::uint64_t> peak_rss_of(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::uint64_t kb = 0;
      std::sscanf(line.c_str(), "VmHWM: %lu", &kb);
      return kb * 1024;
    }
  }
  return std::nullopt;
}

struct WorkerResult {
  double wall_ms = 0.0;
  std::uint64_t peak_rss_bytes = 0;
  int exit_code = 0;
};

/// Runs argv vectors as simultaneous child processes, polling each child's
/// peak RSS at 20 Hz; wait4's ru_maxrss serves as a floor in case a child
/// exits between polls.
inline std::vector<WorkerResult> run_workers(const std::string& exe,
                                             const std::vector<std::vector<std::string>>& argvs) {
  struct Child {
    pid_t pid = -1;
    std::chrono::steady_clock::time_point start;
    std::uint64_t peak = 0;
    bool done = false;
    WorkerResult result;
  };
  std::vector<Child> children(argvs.size());

  for (std::size_t i = 0; i < argvs.size(); ++i) {
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(exe.c_str()));
    for (const auto& a : argvs[i]) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    children[i].start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid == 0) {
      execv(exe.c_str(), argv.data());
      _exit(127);
    }
    children[i].pid = pid;
  }

  std::size_t running = children.size();
  while (running > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    for (auto& c : children) {
      if (c.done || c.pid < 0) continue;
      if (auto rss = peak_rss_of(c.pid)) c.peak = std::max(c.peak, *rss);
      int status = 0;
      struct rusage usage{};
      pid_t r = wait4(c.pid, &status, WNOHANG, &usage);
      if (r == c.pid) {
        const auto end = std::chrono::steady_clock::now();
        c.done = true;
        --running;
        c.result.wall_ms =
            std::chrono::duration<double, std::milli>(end - c.start).count();
        c.result.peak_rss_bytes =
            std::max(c.peak, static_cast<std::uint64_t>(usage.ru_maxrss) * 1024);
        c.result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
      }
    }
  }

  std::vector<WorkerResult> results;
  results.reserve(children.size());
  for (const auto& c : children) results.push_back(c.result);
  return results;
}

}  // namespace terc::bench
