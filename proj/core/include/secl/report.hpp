#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "secl/config.hpp"

namespace secl {

struct Metrics {
  double laa = 0.0;  // accuracy over all seen classes after the last task
  double iaa = 0.0;  // mean of that accuracy over every incremental step
};

/// LAA = A_T and IAA = mean(A_1..A_T).
Metrics compute_metrics(std::span<const double> step_accuracy);

/// K x T accuracy of per-subspace oracle classifiers, one row per subspace.
struct ProbeResult {
  std::vector<std::vector<double>> accuracy;
  std::vector<double> subspace_average;
};

struct RunReport {
  EvalMode mode = EvalMode::aee;
  std::uint64_t seed = 0;
  /// acc[i][j]: accuracy on task j's test set after learning task i (j <= i).
  std::vector<std::vector<double>> acc;
  /// Same, averaged per class inside task j.
  std::vector<std::vector<double>> acc_macro;
  /// A_t pooled over the test sets of every seen class.
  std::vector<double> step_accuracy;
  std::vector<double> step_accuracy_macro;
  double laa = 0.0;
  double iaa = 0.0;
  /// expertise[m-1][j]: accuracy on task j after the last task when AEE may
  /// use only the first m subspaces. Empty if not computed.
  std::vector<std::vector<double>> expertise;
  ProbeResult probe;
  double wall_clock_seconds = 0.0;
  std::string config_echo;
  std::uint64_t backbone_checksum = 0;
  std::uint64_t pool_checksum = 0;

  std::size_t tasks() const { return step_accuracy.size(); }
};

/// Writes metrics.csv, matrix.csv, run_meta.txt and, when present,
/// expertise.csv and probe.csv into `dir` (created if needed).
void emit_report(const RunReport& report, const std::filesystem::path& dir);

/// Reads a directory written by emit_report.
RunReport read_report(const std::filesystem::path& dir);

/// Human-readable summary for the inspect command.
std::string describe_report(const RunReport& report);

/// Runs `fill` against a scratch directory next to `dir` and moves it into
/// place only if `fill` returns normally; otherwise nothing is left behind.
/// An existing `dir` is replaced.
void write_directory_atomically(const std::filesystem::path& dir,
                                const std::function<void(const std::filesystem::path&)>& fill);

}  // namespace secl
