#include "cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "secl/config.hpp"
#include "secl/error.hpp"
#include "secl/experiment.hpp"
#include "secl/format.hpp"
#include "secl/report.hpp"
#include "secl/sweep.hpp"

namespace secl {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
  cmd->add_option("-c,--config", o.config, "Experiment config file (key = value lines)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", o.seed, "Override run.seed");
  cmd->add_option("-o,--out", o.out, "Output directory (default: under $SECL_OUT_ROOT or ./runs)");
  if (with_mode) cmd->add_option("-m,--mode", o.mode, "Override eval.mode: aee, se, noe, misaligned, naive_base");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mode.empty()) cfg.mode = eval_mode_from_string(o.mode);
  cfg.validate();
  return cfg;
}

fs::path output_dir(const CommonOptions& o, const std::string& default_leaf) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv("SECL_OUT_ROOT");
  return fs::path(root && *root ? root : "runs") / default_leaf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw Error("not an integer: " + s);
  return v;
}

void print_metrics(const RunReport& r, const fs::path& dir) {
  std::cout << to_string(r.mode) << " seed=" << r.seed << " LAA=" << format_double(r.laa)
            << " IAA=" << format_double(r.iaa) << " -> " << dir.string() << '\n';
}

int do_run(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const fs::path dir = output_dir(o, to_string(cfg.mode) + "-seed-" + std::to_string(cfg.seed));
  ExperimentState state;
  const RunReport report = run_experiment(cfg, &state);
  write_directory_atomically(dir, [&](const fs::path& scratch) {
    emit_report(report, scratch);
    if (cfg.save_state) save_state(state, scratch);
  });
  print_metrics(report, dir);
  return 0;
}

int do_probe(const CommonOptions& o) {
  ExperimentConfig cfg = resolve(o);
  cfg.probe = true;
  const fs::path dir = output_dir(o, "probe-seed-" + std::to_string(cfg.seed));
  const RunReport report = run_experiment(cfg);
  write_directory_atomically(dir, [&](const fs::path& scratch) { emit_report(report, scratch); });
  const auto& p = report.probe;
  std::cout << "subspace probe (" << p.accuracy.size() << " x " << report.tasks() << ") -> " << dir.string()
            << '\n';
  for (std::size_t k = 0; k < p.accuracy.size(); ++k) {
    std::cout << "  subspace " << k + 1 << ":";
    for (double a : p.accuracy[k]) std::cout << ' ' << format_double(a);
    std::cout << "  avg " << format_double(p.subspace_average[k]) << '\n';
  }
  return 0;
}

struct SweepOptions {
  std::string seeds, alphas, modes;
};

int do_sweep(const CommonOptions& o, const SweepOptions& s) {
  const ExperimentConfig cfg = resolve(o);
  auto seeds = s.seeds.empty() ? cfg.sweep_seeds : parse_list<std::uint64_t>(s.seeds, parse_u64);
  auto alphas = s.alphas.empty() ? cfg.sweep_alphas : parse_list<double>(s.alphas, parse_double);
  auto modes = s.modes.empty() ? cfg.sweep_modes : parse_list<EvalMode>(s.modes, eval_mode_from_string);
  if (seeds.empty() && o.seed) seeds = {*o.seed};
  const fs::path dir = output_dir(o, "sweep");
  const auto cells = run_sweep(cfg, seeds, alphas, modes);
  write_directory_atomically(dir, [&](const fs::path& scratch) { emit_sweep(cells, scratch); });
  std::cout << "mode,alpha,runs,laa_mean,laa_std,iaa_mean,iaa_std\n";
  for (const auto& row : summarize_sweep(cells)) {
    std::cout << to_string(row.mode) << ',' << format_double(row.alpha) << ',' << row.runs << ','
              << format_double(row.laa_mean) << ',' << format_double(row.laa_std) << ','
              << format_double(row.iaa_mean) << ',' << format_double(row.iaa_std) << '\n';
  }
  std::cout << "-> " << dir.string() << '\n';
  return 0;
}

int do_inspect(const std::string& dir) {
  std::cout << describe_report(read_report(dir));
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Continual learning with per-task feature subspaces and an expertise ensemble", "secl"};
  app.require_subcommand(1);

  CommonOptions run_opts, probe_opts, sweep_opts;
  SweepOptions sweep_lists;
  std::string inspect_dir;

  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "Run a grid over seeds, alphas and modes");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--seeds", sweep_lists.seeds, "Comma-separated seeds (default: sweep.seeds)");
  sweep->add_option("--alphas", sweep_lists.alphas, "Comma-separated SSL weights (default: sweep.alphas)");
  sweep->add_option("--modes", sweep_lists.modes, "Comma-separated eval modes (default: sweep.modes)");
  auto* probe = app.add_subcommand("probe", "Per-subspace discriminability probe");
  add_common(probe, probe_opts, false);
  auto* inspect = app.add_subcommand("inspect", "Print a stored report");
  inspect->add_option("dir", inspect_dir, "Report directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << failed->help();
    return 2;
  }

  try {
    if (run->parsed()) return do_run(run_opts);
    if (sweep->parsed()) return do_sweep(sweep_opts, sweep_lists);
    if (probe->parsed()) return do_probe(probe_opts);
    if (inspect->parsed()) return do_inspect(inspect_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace secl
