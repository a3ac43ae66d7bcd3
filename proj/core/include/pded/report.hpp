#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pded {

/// Final numbers of one completed trial log.
struct TrialSummary {
  std::filesystem::path path;
  std::string pde;
  std::string mode;
  int trial = 0;
  std::optional<double> train_r2;
  std::optional<double> test_r2;
  bool recovered = false;
  std::vector<std::optional<double>> best_test_r2;  // index = iter - 1
};

struct GroupSummary {
  std::string pde;
  std::string mode;
  int trials = 0;
  double mean_train_r2 = 0.0;
  double mean_test_r2 = 0.0;
  double sem_test_r2 = 0.0;
  int recovered = 0;
  bool single_trial = false;
};

struct TrajectoryPoint {
  std::string pde;
  std::string mode;
  int iter = 0;
  double mean_best_test_r2 = 0.0;
  double sem = 0.0;
  int n = 0;
};

struct Report {
  std::vector<TrialSummary> trials;
  std::vector<GroupSummary> groups;        // sorted by (pde, mode)
  std::vector<TrajectoryPoint> trajectory;  // sorted by (pde, mode, iter)
};

/// Logs without a footer (interrupted runs) are skipped.
TrialSummary read_trial_log(const std::filesystem::path& path);

/// Scans `runs_dir` recursively for *.jsonl logs. Throws NoRuns when no
/// completed log is found.
Report build_report(const std::filesystem::path& runs_dir);

/// Mean and standard error (sample stddev / sqrt(n)); SEM is 0 for n < 2.
std::pair<double, double> mean_sem(const std::vector<double>& values);

std::string summary_csv(const Report& r);
std::string summary_table(const Report& r);
std::string trajectory_csv(const Report& r);

}  // namespace pded
