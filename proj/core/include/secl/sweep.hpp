#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "secl/config.hpp"
#include "secl/report.hpp"

namespace secl {

/// One (alpha, seed) grid point; reports[i] belongs to the i-th mode.
struct SweepCell {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<RunReport> reports;
};

struct SweepSummaryRow {
  EvalMode mode = EvalMode::aee;
  double alpha = 0.0;
  std::size_t runs = 0;
  double laa_mean = 0.0, laa_std = 0.0;
  double iaa_mean = 0.0, iaa_std = 0.0;
};

/// Mean and sample standard deviation (n-1 denominator; 0 for one value).
std::pair<double, double> mean_and_std(std::span<const double> values);

/// Runs every (alpha, seed) pair; modes share training inside a cell.
/// Empty lists fall back to the config's own alpha / seed / mode.
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, std::vector<std::uint64_t> seeds,
                                 std::vector<double> alphas, std::vector<EvalMode> modes);

/// One row per (mode, alpha), in first-seen order.
std::vector<SweepSummaryRow> summarize_sweep(std::span<const SweepCell> cells);

/// Directory of one report inside a sweep: alpha-<a>/seed-<s>/<mode>.
std::filesystem::path sweep_cell_dir(double alpha, std::uint64_t seed, EvalMode mode);

/// Writes every report under `dir` plus summary.csv with header
/// mode,alpha,runs,laa_mean,laa_std,iaa_mean,iaa_std.
void emit_sweep(std::span<const SweepCell> cells, const std::filesystem::path& dir);

}  // namespace secl
