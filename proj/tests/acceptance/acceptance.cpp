// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
//   secl_acceptance [--only C4,C5]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "secl/config.hpp"
#include "secl/ensemble.hpp"
#include "secl/experiment.hpp"
#include "secl/finite_diff.hpp"
#include "secl/format.hpp"
#include "secl/loss.hpp"
#include "secl/peft.hpp"
#include "secl/report.hpp"
#include "secl/sweep.hpp"
#include "test_util.hpp"

namespace secl {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double time_limit_s;  // 0: none
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

ExperimentConfig reference_config() { return load_config(fs::path(SECL_CONFIG_DIR) / "synthetic.cfg"); }

// ---------------------------------------------------------------- C1

double ce_head_error(RngStream& r) {
  const std::size_t n = 2 + r.uniform_index(7), d = 2 + r.uniform_index(15), c = 2 + r.uniform_index(5);
  RngStream init = r.child("init");
  const Linear head = Linear::random(d, c, 0.7, init);
  const Matrix x = random_normal(n, d, 1.0, init);
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(r.uniform_index(c));

  auto loss_at = [&](const Linear& h, const Matrix& in) { return softmax_cross_entropy(h.forward(in), y).loss; };
  const auto ce = softmax_cross_entropy(head.forward(x), y);
  const auto g = head.backward(x, ce.grad);
  const double h = 1e-5;
  double err = max_relative_error(g.weight, finite_diff_grad([&](const Matrix& w) {
                                    Linear t = head;
                                    t.weight = w;
                                    return loss_at(t, x);
                                  }, head.weight, h));
  err = std::max(err, max_relative_error(g.bias, finite_diff_grad([&](const Matrix& b) {
                                           Linear t = head;
                                           t.bias = b;
                                           return loss_at(t, x);
                                         }, head.bias, h)));
  err = std::max(err, max_relative_error(g.input, finite_diff_grad([&](const Matrix& in) { return loss_at(head, in); },
                                                                   x, h)));
  return err;
}

double composite_error(RngStream& r, PeftKind kind, double alpha) {
  const std::size_t n = 2 + r.uniform_index(7), d = 2 + r.uniform_index(15), c = 2 + r.uniform_index(5);
  const std::size_t rank = 1 + r.uniform_index(d);
  RngStream init = r.child("init");
  PeftModule module(kind, d, rank, init, 0);
  // Move away from the zero-initialised up projection.
  module.up().weight = random_normal(d, rank, 0.5, init);
  if (kind == PeftKind::adapter) {
    module.up().bias = random_normal(1, d, 0.5, init);
    module.down().bias = random_normal(1, rank, 0.5, init);
  }
  const AuxHeads heads{Linear::random(d, c, 0.7, init), Linear::random(d, 4, 0.7, init)};
  const Matrix feats = random_normal(n, d, 1.0, init);
  const Matrix rotated = random_normal(4 * n, d, 1.0, init);
  std::vector<int> y(n), ry;
  for (int& v : y) v = static_cast<int>(r.uniform_index(c));
  for (int k = 0; k < 4; ++k) ry.insert(ry.end(), n, k);
  const double wd = 0.01;

  const CompositeLoss an = peft_composite_loss(module, heads, feats, y, rotated, ry, alpha, wd);
  using Setter = std::function<void(PeftModule&, AuxHeads&, const Matrix&)>;
  auto check = [&](const Matrix& analytic, const Matrix& at, const Setter& set) {
    return max_relative_error(analytic, finite_diff_grad([&](const Matrix& p) {
                                PeftModule m = module;
                                AuxHeads hd = heads;
                                set(m, hd, p);
                                return peft_composite_loss(m, hd, feats, y, rotated, ry, alpha, wd).loss;
                              }, at, 1e-5));
  };
  double err = check(an.module.down_weight, module.down().weight,
                     [](PeftModule& m, AuxHeads&, const Matrix& p) { m.down().weight = p; });
  err = std::max(err, check(an.module.up_weight, module.up().weight,
                            [](PeftModule& m, AuxHeads&, const Matrix& p) { m.up().weight = p; }));
  if (kind == PeftKind::adapter) {
    err = std::max(err, check(an.module.down_bias, module.down().bias,
                              [](PeftModule& m, AuxHeads&, const Matrix& p) { m.down().bias = p; }));
    err = std::max(err, check(an.module.up_bias, module.up().bias,
                              [](PeftModule& m, AuxHeads&, const Matrix& p) { m.up().bias = p; }));
  }
  err = std::max(err, check(an.task_head.weight, heads.task.weight,
                            [](PeftModule&, AuxHeads& h, const Matrix& p) { h.task.weight = p; }));
  err = std::max(err, check(an.task_head.bias, heads.task.bias,
                            [](PeftModule&, AuxHeads& h, const Matrix& p) { h.task.bias = p; }));
  if (alpha > 0.0) {
    err = std::max(err, check(an.ssl_head.weight, heads.ssl.weight,
                              [](PeftModule&, AuxHeads& h, const Matrix& p) { h.ssl.weight = p; }));
  }
  return err;
}

Outcome gradient_suite() {
  RngStream r(1993, "acceptance/gradients");
  double worst = 0.0;
  int instances = 0;
  for (int i = 0; i < 20; ++i, ++instances) worst = std::max(worst, ce_head_error(r));
  for (PeftKind kind : {PeftKind::adapter, PeftKind::lora}) {
    for (double alpha : {0.0, 0.3}) {
      for (int i = 0; i < 10; ++i, ++instances) worst = std::max(worst, composite_error(r, kind, alpha));
    }
  }
  return {worst < 1e-4, std::to_string(instances) + " random instances, max relative error " + fmt(worst) +
                            " (limit 1e-4)"};
}

// ---------------------------------------------------------------- C2

Outcome gaussian_store() {
  ExperimentConfig cfg = reference_config();
  cfg.mode = EvalMode::aee;
  cfg.expertise = false;
  ExperimentState state;
  run_experiment(cfg, &state);
  const GaussStore& store = state.store;
  const std::size_t count = store.real_entry_count();

  const TaskStream stream = build_stream(cfg);
  std::set<std::pair<int, int>> expected;
  for (int c = 0; c < stream.num_classes(); ++c) {
    for (int k = 0; k <= stream.class_task[static_cast<std::size_t>(c)]; ++k) expected.insert({k, c});
  }
  const auto keys = store.real_keys();
  const bool set_equal = std::set<std::pair<int, int>>(keys.begin(), keys.end()) == expected;

  const int tasks = static_cast<int>(stream.num_tasks());
  std::size_t substitutions = 0, bad = 0;
  for (int c = 0; c < stream.num_classes(); ++c) {
    const int home = store.class_task(c);
    for (int k = 0; k < tasks; ++k) {
      const ClassGaussian g = store.effective_gaussian(k, c);
      if (k > home) {
        const ClassGaussian& sub = store.entries().at({home, c});
        ++substitutions;
        if (!g.approximated || g.mean != sub.mean || g.var != sub.var) ++bad;
      } else if (g.approximated || !(g == store.entries().at({k, c}))) {
        ++bad;
      }
    }
  }
  std::ostringstream os;
  os << "real entries " << count << " (expected 550), key set " << (set_equal ? "matches" : "differs")
     << ", " << substitutions << " substitutions checked, " << bad << " mismatches";
  return {count == 550 && set_equal && bad == 0, os.str()};
}

// ---------------------------------------------------------------- C3

double correctly_rounded_mean(double a, double b) {
  return static_cast<double>((static_cast<long double>(a) + static_cast<long double>(b)) / 2.0L);
}

Outcome ensemble_algebra() {
  std::vector<std::string> failures;

  // Worked example with two tasks of two classes each.
  ScoreStack worked;
  worked.ranges = {{0, 2}, {2, 4}};
  worked.scores = {Matrix{{0.5, 0.5, 0.2, 0.8}}, Matrix{{0.9, 0.1, 0.6, 0.4}}};
  const auto s = aee_predict(worked).scores;
  const bool worked_ok = s(0, 2) == correctly_rounded_mean(0.2, 0.6) && s(0, 3) == correctly_rounded_mean(0.8, 0.4) &&
                         fmt(s(0, 2), 15) == "0.4" && fmt(s(0, 3), 15) == "0.6" && s(0, 0) == 0.5 && s(0, 1) == 0.5;
  if (!worked_ok) failures.push_back("worked example gave [" + fmt(s(0, 2), 17) + ", " + fmt(s(0, 3), 17) + "]");

  // Invariance to subspaces without expertise on a task.
  RngStream r(1993, "acceptance/ensemble");
  std::size_t perturbations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t tasks = 2 + r.uniform_index(5), per = 1 + r.uniform_index(4), n = 1 + r.uniform_index(10);
    ScoreStack base;
    for (std::size_t t = 0; t < tasks; ++t)
      base.ranges.push_back({static_cast<int>(t * per), static_cast<int>((t + 1) * per)});
    for (std::size_t k = 0; k < tasks; ++k) base.scores.push_back(softmax_rows(random_normal(n, tasks * per, 2.0, r)));
    const auto ref = aee_predict(base);
    for (std::size_t k = 1; k < tasks; ++k) {
      for (std::size_t t = 0; t < k; ++t, ++perturbations) {
        ScoreStack p = base;
        for (std::size_t i = 0; i < n; ++i)
          for (int j = p.ranges[t].begin; j < p.ranges[t].end; ++j)
            p.scores[k](i, static_cast<std::size_t>(j)) = 1e3 * r.normal();
        const auto out = aee_predict(p);
        if (out.scores != ref.scores || out.labels != ref.labels) {
          failures.push_back("perturbing Z_{" + std::to_string(k) + "," + std::to_string(t) + "} changed AEE");
        }
      }
    }
    // Single-task degeneracy on the first slice of the same draw.
    ScoreStack one;
    one.ranges = {base.ranges[0]};
    one.scores = {softmax_rows(random_normal(n, per, 2.0, r))};
    const auto a = aee_predict(one), se = simple_ensemble_predict(one), no = no_ensemble_predict(one);
    if (a.scores != se.scores || a.scores != no.scores || a.labels != se.labels || a.labels != no.labels) {
      failures.push_back("T=1 modes disagree");
    }
  }
  std::string detail = "worked example [" + fmt(s(0, 2), 15) + ", " + fmt(s(0, 3), 15) + "], " +
                       std::to_string(perturbations) + " perturbations, 20 single-task stacks";
  if (!failures.empty()) detail += "; " + failures.front();
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- C4 / C5

struct ModeMeans {
  double aee = 0, se = 0, noe = 0, misaligned = 0, naive = 0;
  std::string per_seed;
};

const ModeMeans& reference_sweep() {
  static const ModeMeans means = [] {
    const ExperimentConfig cfg = reference_config();
    const std::vector<EvalMode> modes{EvalMode::aee, EvalMode::se, EvalMode::noe, EvalMode::misaligned,
                                      EvalMode::naive_base};
    ExperimentConfig c = cfg;
    c.expertise = false;
    const auto cells = run_sweep(c, {1993, 1994, 1995}, {c.peft.alpha}, modes);
    ModeMeans m;
    for (const auto& cell : cells) {
      m.aee += cell.reports[0].laa / 3.0;
      m.se += cell.reports[1].laa / 3.0;
      m.noe += cell.reports[2].laa / 3.0;
      m.misaligned += cell.reports[3].laa / 3.0;
      m.naive += cell.reports[4].laa / 3.0;
    }
    return m;
  }();
  return means;
}

Outcome alignment_effect() {
  const ModeMeans& m = reference_sweep();
  const double gap = 100.0 * (m.naive - m.misaligned);
  return {gap >= 5.0, "mean LAA naive_base " + fmt(m.naive) + " vs misaligned " + fmt(m.misaligned) + ", gap " +
                          fmt(gap, 3) + " points (need >= 5)"};
}

Outcome ensemble_ablation() {
  const ModeMeans& m = reference_sweep();
  const double gap = 100.0 * (m.aee - m.se);
  return {m.aee >= m.noe && m.aee >= m.se && gap >= 2.0,
          "mean LAA AEE " + fmt(m.aee) + ", SE " + fmt(m.se) + ", NoE " + fmt(m.noe) + ", AEE-SE " + fmt(gap, 3) +
              " points (need >= 2), runs shared with C4"};
}

// ---------------------------------------------------------------- C6

Outcome discriminability() {
  ExperimentConfig cfg = reference_config();
  cfg.synthetic.noise = 0.0;
  cfg.probe = true;
  cfg.expertise = false;
  const RunReport r = run_experiment(cfg);
  const auto& acc = r.probe.accuracy;
  std::size_t ok = 0;
  std::string first_bad;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double best = *std::max_element(acc[k].begin(), acc[k].end());
    if (k < acc[k].size() && acc[k][k] == best) {
      ++ok;
    } else if (first_bad.empty()) {
      first_bad = "; subspace " + std::to_string(k + 1) + " peaks elsewhere";
    }
  }
  double diag = 0.0;
  for (std::size_t k = 0; k < acc.size(); ++k) diag += acc[k][k] / static_cast<double>(acc.size());
  return {ok == acc.size() && !acc.empty(), std::to_string(ok) + "/" + std::to_string(acc.size()) +
                                                " subspaces peak on their own task, mean diagonal " + fmt(diag) +
                                                first_bad};
}

// ---------------------------------------------------------------- C7

Outcome ssl_ablation() {
  ExperimentConfig cfg = load_config(fs::path(SECL_CONFIG_DIR) / "digits_ssl.cfg");
  cfg.expertise = false;
  const double alpha = cfg.peft.alpha > 0.0 ? cfg.peft.alpha : 0.1;
  const std::vector<EvalMode> modes{EvalMode::aee};
  const auto cells = run_sweep(cfg, {1993, 1994, 1995}, {0.0, alpha}, modes);
  double without = 0.0, with = 0.0;
  for (const auto& cell : cells) (cell.alpha == 0.0 ? without : with) += cell.reports[0].laa / 3.0;
  const double diff = 100.0 * (with - without);
  return {diff >= -0.5, "mean LAA alpha=" + fmt(alpha) + " " + fmt(with) + " vs alpha=0 " + fmt(without) +
                            ", difference " + fmt(diff, 3) + " points (need >= -0.5)"};
}

// ---------------------------------------------------------------- C8

Outcome task_count() {
  std::vector<double> laa;
  for (std::size_t tasks : {5u, 10u, 20u}) {
    ExperimentConfig cfg = reference_config();
    // 100 classes in every split; block width must fit 20 classes.
    cfg.layout.tasks = tasks;
    cfg.synthetic.tasks = tasks;
    cfg.synthetic.classes_per_task = 100 / tasks;
    cfg.synthetic.block_dims = 5;
    cfg.synthetic.input_dim = 100;
    cfg.expertise = false;
    cfg.validate();
    laa.push_back(run_experiment(cfg).laa);
  }
  const double drift = 100.0 * std::max(std::abs(laa[1] - laa[0]), std::abs(laa[2] - laa[0]));
  return {drift <= 10.0, "AEE LAA 5/10/20 tasks " + fmt(laa[0]) + " / " + fmt(laa[1]) + " / " + fmt(laa[2]) +
                             ", max drift " + fmt(drift, 3) + " points (limit 10)"};
}

// ---------------------------------------------------------------- C9

Outcome determinism() {
  const ExperimentConfig cfg = reference_config();
  testing::TempDir dir("acceptance-det");
  for (const char* leaf : {"first", "second"}) emit_report(run_experiment(cfg), dir.path() / leaf);
  bool same = true;
  for (const char* f : {"metrics.csv", "matrix.csv"}) {
    const std::string a = testing::read_file(dir.path() / "first" / f);
    same = same && !a.empty() && a == testing::read_file(dir.path() / "second" / f);
  }
  return {same, std::string("metrics.csv and matrix.csv ") + (same ? "byte-identical" : "differ") +
                    " across two runs (seed " + std::to_string(cfg.seed) + ")"};
}

// ---------------------------------------------------------------- C10

Outcome legality() {
  ExperimentConfig cfg = reference_config();
  cfg.probe = true;
  cfg.expertise = false;
  const TaskStream stream = build_stream(cfg);
  StreamGuard guard(stream);
  const std::vector<EvalMode> modes{EvalMode::aee, EvalMode::se, EvalMode::noe, EvalMode::misaligned,
                                    EvalMode::naive_base};
  run_on_stream(cfg, stream, modes, guard);
  std::size_t future = 0;
  for (const auto& a : guard.log()) future += a.task > a.learning_task;
  const bool ok = future == 0 && !guard.log().empty() && guard.offline_reads() == 1;
  return {ok, std::to_string(guard.log().size()) + " guarded reads, " + std::to_string(future) +
                  " future reads, " + std::to_string(guard.offline_reads()) + " offline read (the probe)"};
}

}  // namespace
}  // namespace secl

int main(int argc, char** argv) {
  using namespace secl;
  std::set<std::string> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string id; std::getline(ss, id, ',');) only.insert(id);
    }
  }

  const std::vector<Criterion> criteria{
      {"C1", "gradient suite", 10, gradient_suite},
      {"C2", "gaussian store", 30, gaussian_store},
      {"C3", "ensemble algebra", 0, ensemble_algebra},
      {"C4", "alignment effect", 300, alignment_effect},
      {"C5", "ensemble ablation", 600, ensemble_ablation},
      {"C6", "subspace discriminability", 0, discriminability},
      {"C7", "ssl ablation", 1800, ssl_ablation},
      {"C8", "task-count robustness", 1200, task_count},
      {"C9", "determinism", 0, determinism},
      {"C10", "continual-learning legality", 0, legality},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s == 0 || secs < c.time_limit_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::string timing = fmt(secs, 3) + " s";
    if (c.time_limit_s > 0) timing += " (limit " + fmt(c.time_limit_s, 4) + " s)";
    std::cout << c.id << (c.id.size() < 3 ? "  " : " ") << (pass ? "PASS" : "FAIL") << "  " << c.title << ": "
              << out.detail << "; " << timing << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
