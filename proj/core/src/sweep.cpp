#include "secl/sweep.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include "secl/error.hpp"
#include "secl/experiment.hpp"
#include "secl/format.hpp"

namespace secl {

std::pair<double, double> mean_and_std(std::span<const double> values) {
  require(!values.empty(), "mean_and_std: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, std::vector<std::uint64_t> seeds,
                                 std::vector<double> alphas, std::vector<EvalMode> modes) {
  if (seeds.empty()) seeds = {cfg.seed};
  if (alphas.empty()) alphas = {cfg.peft.alpha};
  if (modes.empty()) modes = {cfg.mode};

  std::vector<SweepCell> cells;
  for (double a : alphas) {
    for (std::uint64_t s : seeds) cells.push_back({a, s, {}});
  }
  auto run_cell = [&](SweepCell& cell) {
    ExperimentConfig c = cfg;
    c.seed = cell.seed;
    c.peft.alpha = cell.alpha;
    cell.reports = run_experiment_modes(c, modes);
  };
  // Cells are independent; run them concurrently when cores are available.
  if (std::thread::hardware_concurrency() > 1 && cells.size() > 1) {
    std::vector<std::future<void>> jobs;
    for (auto& cell : cells) jobs.push_back(std::async(std::launch::async, run_cell, std::ref(cell)));
    for (auto& j : jobs) j.get();
  } else {
    for (auto& cell : cells) run_cell(cell);
  }
  return cells;
}

std::vector<SweepSummaryRow> summarize_sweep(std::span<const SweepCell> cells) {
  std::vector<SweepSummaryRow> rows;
  std::vector<std::vector<double>> laa, iaa;
  for (const auto& cell : cells) {
    for (const auto& r : cell.reports) {
      std::size_t i = 0;
      while (i < rows.size() && !(rows[i].mode == r.mode && rows[i].alpha == cell.alpha)) ++i;
      if (i == rows.size()) {
        rows.push_back({r.mode, cell.alpha});
        laa.emplace_back();
        iaa.emplace_back();
      }
      laa[i].push_back(r.laa);
      iaa[i].push_back(r.iaa);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].runs = laa[i].size();
    std::tie(rows[i].laa_mean, rows[i].laa_std) = mean_and_std(laa[i]);
    std::tie(rows[i].iaa_mean, rows[i].iaa_std) = mean_and_std(iaa[i]);
  }
  return rows;
}

std::filesystem::path sweep_cell_dir(double alpha, std::uint64_t seed, EvalMode mode) {
  return std::filesystem::path("alpha-" + format_double(alpha)) / ("seed-" + std::to_string(seed)) /
         to_string(mode);
}

void emit_sweep(std::span<const SweepCell> cells, const std::filesystem::path& dir) {
  for (const auto& cell : cells) {
    for (const auto& r : cell.reports) emit_report(r, dir / sweep_cell_dir(cell.alpha, cell.seed, r.mode));
  }
  std::filesystem::create_directories(dir);
  const auto path = dir / "summary.csv";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "mode,alpha,runs,laa_mean,laa_std,iaa_mean,iaa_std\n";
  for (const auto& row : summarize_sweep(cells)) {
    out << to_string(row.mode) << ',' << format_double(row.alpha) << ',' << row.runs << ','
        << format_double(row.laa_mean) << ',' << format_double(row.laa_std) << ','
        << format_double(row.iaa_mean) << ',' << format_double(row.iaa_std) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace secl
