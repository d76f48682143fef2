#include "secl/report.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "secl/error.hpp"
#include "secl/format.hpp"

namespace secl {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void expect_header(const std::vector<std::string>& lines, const std::string& header,
                   const std::filesystem::path& p) {
  if (lines.empty() || lines.front() != header) throw Error(p.string() + ": unexpected header");
}

}  // namespace

Metrics compute_metrics(std::span<const double> step_accuracy) {
  require(!step_accuracy.empty(), "compute_metrics: need at least one step");
  Metrics m;
  m.laa = step_accuracy.back();
  m.iaa = std::accumulate(step_accuracy.begin(), step_accuracy.end(), 0.0) /
          static_cast<double>(step_accuracy.size());
  return m;
}

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "metrics.csv");
    out << "name,value\n";
    for (std::size_t t = 0; t < report.step_accuracy.size(); ++t) {
      out << "A_" << t + 1 << "," << format_double(report.step_accuracy[t]) << "\n";
    }
    for (std::size_t t = 0; t < report.step_accuracy_macro.size(); ++t) {
      out << "A_macro_" << t + 1 << "," << format_double(report.step_accuracy_macro[t]) << "\n";
    }
    out << "LAA," << format_double(report.laa) << "\n";
    out << "IAA," << format_double(report.iaa) << "\n";
    if (!out) throw Error("write failed: " + (dir / "metrics.csv").string());
  }
  {
    auto out = open_out(dir / "matrix.csv");
    out << "after_task,eval_task,accuracy,accuracy_macro\n";
    for (std::size_t i = 0; i < report.acc.size(); ++i) {
      for (std::size_t j = 0; j < report.acc[i].size(); ++j) {
        out << i + 1 << "," << j + 1 << "," << format_double(report.acc[i][j]) << ","
            << format_double(report.acc_macro[i][j]) << "\n";
      }
    }
    if (!out) throw Error("write failed: " + (dir / "matrix.csv").string());
  }
  if (!report.expertise.empty()) {
    auto out = open_out(dir / "expertise.csv");
    out << "subspaces,eval_task,accuracy\n";
    for (std::size_t m = 0; m < report.expertise.size(); ++m) {
      for (std::size_t j = 0; j < report.expertise[m].size(); ++j) {
        out << m + 1 << "," << j + 1 << "," << format_double(report.expertise[m][j]) << "\n";
      }
    }
  }
  if (!report.probe.accuracy.empty()) {
    auto out = open_out(dir / "probe.csv");
    out << "subspace";
    for (std::size_t j = 0; j < report.probe.accuracy.front().size(); ++j) out << ",task_" << j + 1;
    out << ",average\n";
    for (std::size_t k = 0; k < report.probe.accuracy.size(); ++k) {
      out << k + 1;
      for (double a : report.probe.accuracy[k]) out << "," << format_double(a);
      out << "," << format_double(report.probe.subspace_average[k]) << "\n";
    }
  }
  {
    auto out = open_out(dir / "run_meta.txt");
    out << "mode = " << to_string(report.mode) << "\n";
    out << "seed = " << report.seed << "\n";
    out << "tasks = " << report.tasks() << "\n";
    out << "wall_clock_seconds = " << format_double(report.wall_clock_seconds) << "\n";
    out << "backbone_checksum = " << report.backbone_checksum << "\n";
    out << "pool_checksum = " << report.pool_checksum << "\n";
    out << "[config]\n" << report.config_echo;
  }
}

RunReport read_report(const std::filesystem::path& dir) {
  RunReport r;
  std::map<std::string, double> metrics;
  {
    const auto p = dir / "metrics.csv";
    const auto lines = read_lines(p);
    expect_header(lines, "name,value", p);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = split_csv(lines[i]);
      if (cells.size() != 2) throw Error(p.string() + ": malformed row " + std::to_string(i + 1));
      metrics[cells[0]] = parse_double(cells[1]);
    }
  }
  for (std::size_t t = 1; metrics.contains("A_" + std::to_string(t)); ++t) {
    r.step_accuracy.push_back(metrics.at("A_" + std::to_string(t)));
  }
  for (std::size_t t = 1; metrics.contains("A_macro_" + std::to_string(t)); ++t) {
    r.step_accuracy_macro.push_back(metrics.at("A_macro_" + std::to_string(t)));
  }
  if (!metrics.contains("LAA") || !metrics.contains("IAA")) throw Error("metrics.csv: missing LAA/IAA");
  r.laa = metrics.at("LAA");
  r.iaa = metrics.at("IAA");

  {
    const auto p = dir / "matrix.csv";
    const auto lines = read_lines(p);
    expect_header(lines, "after_task,eval_task,accuracy,accuracy_macro", p);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = split_csv(lines[i]);
      if (cells.size() != 4) throw Error(p.string() + ": malformed row " + std::to_string(i + 1));
      const auto after = static_cast<std::size_t>(std::stoul(cells[0]));
      const auto task = static_cast<std::size_t>(std::stoul(cells[1]));
      if (after == 0 || task == 0 || task > after) throw Error(p.string() + ": bad task indices");
      if (r.acc.size() < after) {
        r.acc.resize(after);
        r.acc_macro.resize(after);
      }
      auto& row = r.acc[after - 1];
      auto& row_m = r.acc_macro[after - 1];
      if (row.size() < task) {
        row.resize(task);
        row_m.resize(task);
      }
      row[task - 1] = parse_double(cells[2]);
      row_m[task - 1] = parse_double(cells[3]);
    }
  }

  if (std::filesystem::exists(dir / "expertise.csv")) {
    const auto p = dir / "expertise.csv";
    const auto lines = read_lines(p);
    expect_header(lines, "subspaces,eval_task,accuracy", p);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = split_csv(lines[i]);
      if (cells.size() != 3) throw Error(p.string() + ": malformed row");
      const auto m = static_cast<std::size_t>(std::stoul(cells[0]));
      const auto j = static_cast<std::size_t>(std::stoul(cells[1]));
      if (r.expertise.size() < m) r.expertise.resize(m);
      if (r.expertise[m - 1].size() < j) r.expertise[m - 1].resize(j);
      r.expertise[m - 1][j - 1] = parse_double(cells[2]);
    }
  }

  if (std::filesystem::exists(dir / "probe.csv")) {
    const auto p = dir / "probe.csv";
    const auto lines = read_lines(p);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = split_csv(lines[i]);
      if (cells.size() < 3) throw Error(p.string() + ": malformed row");
      std::vector<double> row;
      for (std::size_t c = 1; c + 1 < cells.size(); ++c) row.push_back(parse_double(cells[c]));
      r.probe.accuracy.push_back(std::move(row));
      r.probe.subspace_average.push_back(parse_double(cells.back()));
    }
  }

  {
    const auto lines = read_lines(dir / "run_meta.txt");
    bool in_config = false;
    for (const auto& line : lines) {
      if (in_config) {
        r.config_echo += line + "\n";
        continue;
      }
      if (line == "[config]") {
        in_config = true;
        continue;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 3);
      if (key == "mode") r.mode = eval_mode_from_string(value);
      else if (key == "seed") r.seed = std::stoull(value);
      else if (key == "wall_clock_seconds") r.wall_clock_seconds = parse_double(value);
      else if (key == "backbone_checksum") r.backbone_checksum = std::stoull(value);
      else if (key == "pool_checksum") r.pool_checksum = std::stoull(value);
    }
  }
  return r;
}

std::string describe_report(const RunReport& r) {
  std::ostringstream out;
  out << "mode " << to_string(r.mode) << ", seed " << r.seed << ", " << r.tasks() << " tasks\n";
  out << "LAA " << format_double(r.laa) << "  IAA " << format_double(r.iaa) << "\n";
  out << "A_t:";
  for (double a : r.step_accuracy) out << " " << format_double(a);
  out << "\naccuracy matrix (row = after task, column = evaluated task):\n";
  for (std::size_t i = 0; i < r.acc.size(); ++i) {
    out << "  " << i + 1 << ":";
    for (double a : r.acc[i]) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), " %.3f", a);
      out << buf;
    }
    out << "\n";
  }
  if (!r.expertise.empty()) out << "expertise table: " << r.expertise.size() << " rows\n";
  if (!r.probe.accuracy.empty()) out << "probe heatmap: " << r.probe.accuracy.size() << " subspaces\n";
  return out.str();
}

void write_directory_atomically(const std::filesystem::path& dir,
                                const std::function<void(const std::filesystem::path&)>& fill) {
  static std::atomic<unsigned> counter{0};
  namespace fs = std::filesystem;
  const fs::path target = dir.has_filename() ? dir : dir.parent_path();
  const fs::path scratch = target.string() + ".partial-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter++);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  try {
    fill(scratch);
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(scratch, target);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
    throw;
  }
}

}  // namespace secl
