#include "secl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <map>
#include <set>
#include <thread>

#include "secl/error.hpp"
#include "secl/idx.hpp"
#include "secl/loss.hpp"

namespace secl {
namespace {

bool uses(std::span<const EvalMode> modes, std::initializer_list<EvalMode> wanted) {
  return std::any_of(modes.begin(), modes.end(), [&](EvalMode m) {
    return std::find(wanted.begin(), wanted.end(), m) != wanted.end();
  });
}

// Runs fn(0..n-1); work items must touch disjoint state.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, fn, i));
  for (auto& j : jobs) j.get();
}

std::string task_label(const char* what, std::size_t k, std::size_t t) {
  return std::string(what) + "/k" + std::to_string(k) + "/task" + std::to_string(t);
}

std::vector<int> to_local(std::span<const int> labels, TaskRange r) {
  std::vector<int> out(labels.begin(), labels.end());
  for (int& y : out) y -= r.begin;
  return out;
}

// Rethrows with the failing stage named.
template <typename Fn>
auto in_stage(const std::string& stage, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(stage + ": " + e.what());
  }
}

class Learner {
 public:
  Learner(const ExperimentConfig& cfg, std::span<const EvalMode> modes, Backbone backbone)
      : cfg_(cfg), modes_(modes.begin(), modes.end()) {
    state_.backbone = std::move(backbone);
    all_subspaces_ = uses(modes, {EvalMode::aee, EvalMode::se, EvalMode::misaligned});
    aligned_all_ = uses(modes, {EvalMode::aee, EvalMode::se});
    aligned_first_ = uses(modes, {EvalMode::aee, EvalMode::se, EvalMode::noe, EvalMode::naive_base});
    misaligned_ = uses(modes, {EvalMode::misaligned});
    backbone_checksum_ = state_.backbone.checksum();
  }

  void learn_task(StreamGuard& guard, std::size_t t) {
    guard.begin_task(t);
    const LabeledDataset& train = guard.train(t);
    const TaskRange range = guard.classes(t);

    if (t == 0 || all_subspaces_) {
      in_stage("peft training (task " + std::to_string(t + 1) + ")", [&] {
        RngStream rng(cfg_.seed, "peft/task" + std::to_string(t));
        auto res = train_peft_module(train, range, state_.backbone, static_cast<int>(t), cfg_.peft, rng);
        module_checksums_.push_back(res.module.checksum());
        state_.pool.append(std::move(res.module));
      });
    }
    const std::size_t subspaces = state_.pool.size();

    const Matrix base = state_.backbone.extract(train.inputs);
    std::vector<Matrix> features(subspaces);
    for (std::size_t k = 0; k < subspaces; ++k) features[k] = state_.pool[k].forward(base);

    const std::size_t aligned = aligned_all_ ? subspaces : (aligned_first_ ? 1 : 0);
    while (state_.classifiers.size() < aligned) {
      SubspaceClassifier clf(static_cast<int>(state_.classifiers.size()), state_.backbone.output_dim());
      for (std::size_t j = 0; j < t; ++j) clf.expand_head(guard.classes(j).size());
      state_.classifiers.push_back(std::move(clf));
    }
    const ReplayBatchPlan plan = ReplayBatchPlan::balanced(train.size(), static_cast<std::size_t>(range.size()));
    in_stage("classifier fine-tuning (task " + std::to_string(t + 1) + ")", [&] {
      for (std::size_t k = 0; k < aligned; ++k) state_.classifiers[k].expand_head(range.size());
      parallel_for(aligned, [&](std::size_t k) {
        RngStream rng(cfg_.seed, task_label("classifier", k, t));
        finetune_classifier(state_.classifiers[k], features[k], train.labels, state_.store, plan,
                            cfg_.classifier, rng);
      });
    });

    if (misaligned_) {
      in_stage("misaligned head (task " + std::to_string(t + 1) + ")", [&] {
        SubspaceClassifier head(static_cast<int>(t), state_.backbone.output_dim());
        head.expand_head(range.size());
        const auto local = to_local(train.labels, range);
        GaussStore empty;
        RngStream rng(cfg_.seed, "misaligned/task" + std::to_string(t));
        finetune_classifier(head, features[t], local, empty, plan, cfg_.classifier, rng);
        state_.misaligned_heads.push_back(std::move(head));
      });
    }

    in_stage("gaussian recording (task " + std::to_string(t + 1) + ")", [&] {
      state_.store.record_task_gaussians(static_cast<int>(t), features, train.labels);
    });

    for (std::size_t k = 0; k < module_checksums_.size(); ++k) {
      if (state_.pool[k].checksum() != module_checksums_[k]) {
        throw Error("peft module " + std::to_string(k + 1) + " changed after its task completed");
      }
    }
  }

  struct StepResult {
    std::vector<double> acc, acc_macro;
    double pooled = 0.0, pooled_macro = 0.0;
  };

  /// Evaluates every mode on the test sets of tasks 0..t.
  std::map<EvalMode, StepResult> evaluate(const StreamGuard& guard, std::size_t t,
                                          std::vector<TaskEvaluation>* final_stacks) {
    std::map<EvalMode, StepResult> out;
    std::map<EvalMode, std::vector<int>> all_pred;
    std::vector<int> all_labels;
    const auto ranges_now = [&] {
      std::vector<TaskRange> r;
      for (std::size_t j = 0; j <= t; ++j) r.push_back(guard.classes(j));
      return r;
    }();

    for (std::size_t j = 0; j <= t; ++j) {
      const LabeledDataset& test = guard.test(j);
      const auto& feats = test_features(j, test);
      ScoreStack stack;
      stack.ranges = ranges_now;
      for (const auto& clf : state_.classifiers) {
        stack.scores.push_back(score(clf, feats.at(static_cast<std::size_t>(clf.subspace())), cfg_.score_kind));
      }
      for (EvalMode m : modes_) {
        std::vector<int> pred;
        switch (m) {
          case EvalMode::aee: pred = aee_predict(stack).labels; break;
          case EvalMode::se: pred = simple_ensemble_predict(stack).labels; break;
          case EvalMode::noe:
          case EvalMode::naive_base: pred = no_ensemble_predict(stack).labels; break;
          case EvalMode::misaligned: pred = misaligned_predict(state_.misaligned_heads, feats, ranges_now); break;
        }
        out[m].acc.push_back(accuracy(pred, test.labels));
        out[m].acc_macro.push_back(macro_accuracy(pred, test.labels));
        auto& ap = all_pred[m];
        ap.insert(ap.end(), pred.begin(), pred.end());
      }
      all_labels.insert(all_labels.end(), test.labels.begin(), test.labels.end());
      if (final_stacks && aligned_all_) final_stacks->push_back({std::move(stack), test.labels});
    }
    for (EvalMode m : modes_) {
      out[m].pooled = accuracy(all_pred[m], all_labels);
      out[m].pooled_macro = macro_accuracy(all_pred[m], all_labels);
    }
    return out;
  }

  void check_backbone() const {
    if (state_.backbone.checksum() != backbone_checksum_) throw Error("backbone weights changed during the run");
  }

  ExperimentState& state() { return state_; }
  std::uint64_t backbone_checksum() const { return backbone_checksum_; }
  bool has_full_bank() const { return aligned_all_; }

 private:
  // Subspace features of task j's test set, computed once per subspace.
  const std::vector<Matrix>& test_features(std::size_t j, const LabeledDataset& test) {
    auto& cached = test_cache_[j];
    if (cached.empty()) base_cache_[j] = state_.backbone.extract(test.inputs);
    while (cached.size() < state_.pool.size()) cached.push_back(state_.pool[cached.size()].forward(base_cache_[j]));
    return cached;
  }

  const ExperimentConfig& cfg_;
  std::vector<EvalMode> modes_;
  ExperimentState state_;
  bool all_subspaces_ = false, aligned_all_ = false, aligned_first_ = false, misaligned_ = false;
  std::uint64_t backbone_checksum_ = 0;
  std::vector<std::uint64_t> module_checksums_;
  std::map<std::size_t, Matrix> base_cache_;
  std::map<std::size_t, std::vector<Matrix>> test_cache_;
};

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  require(predicted.size() == labels.size() && !labels.empty(), "accuracy: size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double macro_accuracy(std::span<const int> predicted, std::span<const int> labels) {
  require(predicted.size() == labels.size() && !labels.empty(), "macro_accuracy: size mismatch");
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [c, n] = per_class[labels[i]];
    c += predicted[i] == labels[i];
    ++n;
  }
  double sum = 0.0;
  for (const auto& [_, cn] : per_class) sum += static_cast<double>(cn.first) / static_cast<double>(cn.second);
  return sum / static_cast<double>(per_class.size());
}

TaskStream build_stream(const ExperimentConfig& cfg) {
  if (cfg.stream_kind == StreamKind::synthetic) {
    SyntheticSpec spec = cfg.synthetic;
    spec.tasks = cfg.layout.tasks;
    RngStream rng(cfg.seed, "data/synthetic");
    return gen_synthetic_stream(spec, rng);
  }
  const LabeledDataset train = load_idx(cfg.train_images, cfg.train_labels);
  const LabeledDataset test = load_idx(cfg.test_images, cfg.test_labels);
  StreamLayout layout = cfg.layout;
  layout.shuffle_seed = cfg.effective_shuffle_seed();
  return build_task_stream(train, test, layout);
}

Backbone build_run_backbone(const ExperimentConfig& cfg, const TaskStream& stream, double* pretrain_accuracy) {
  RngStream rng(cfg.seed, "backbone");
  const std::size_t input_dim = stream.tasks.front().train.input_dim();
  const LabeledDataset* pretrain = stream.pretrain ? &*stream.pretrain : nullptr;
  return build_backbone(cfg.backbone, input_dim, rng, pretrain, pretrain_accuracy);
}

std::vector<RunReport> run_on_stream(const ExperimentConfig& cfg, const TaskStream& stream,
                                     std::span<const EvalMode> modes, StreamGuard& guard,
                                     ExperimentState* state_out) {
  require(!modes.empty(), "run: no evaluation modes requested");
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  Backbone backbone = in_stage("backbone construction", [&] { return build_run_backbone(cfg, stream); });
  Learner learner(cfg, modes, std::move(backbone));

  const std::size_t T = stream.num_tasks();
  std::vector<RunReport> reports(modes.size());
  std::vector<TaskEvaluation> final_stacks;
  for (std::size_t t = 0; t < T; ++t) {
    learner.learn_task(guard, t);
    auto step = in_stage("evaluation (task " + std::to_string(t + 1) + ")", [&] {
      return learner.evaluate(guard, t, t + 1 == T ? &final_stacks : nullptr);
    });
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const auto& s = step.at(modes[i]);
      reports[i].acc.push_back(s.acc);
      reports[i].acc_macro.push_back(s.acc_macro);
      reports[i].step_accuracy.push_back(s.pooled);
      reports[i].step_accuracy_macro.push_back(s.pooled_macro);
    }
  }
  learner.check_backbone();

  std::vector<std::vector<double>> expertise;
  if (cfg.expertise && learner.has_full_bank()) expertise = expertise_analysis(final_stacks);
  ProbeResult probe;
  if (cfg.probe) {
    probe = in_stage("subspace probe", [&] {
      return subspace_probe(learner.state().pool, learner.state().backbone, guard.offline(), cfg.classifier,
                            cfg.seed);
    });
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const std::string echo = config_to_text(cfg);
  const std::uint64_t pool_sum = learner.state().pool.checksum(learner.state().pool.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    RunReport& r = reports[i];
    r.mode = modes[i];
    r.seed = cfg.seed;
    const Metrics m = compute_metrics(r.step_accuracy);
    r.laa = m.laa;
    r.iaa = m.iaa;
    if (modes[i] == EvalMode::aee || modes[i] == EvalMode::se) r.expertise = expertise;
    r.probe = probe;
    r.wall_clock_seconds = elapsed;
    r.config_echo = echo;
    r.backbone_checksum = learner.backbone_checksum();
    r.pool_checksum = pool_sum;
  }
  if (state_out) *state_out = std::move(learner.state());
  return reports;
}

std::vector<RunReport> run_experiment_modes(const ExperimentConfig& cfg, std::span<const EvalMode> modes,
                                            ExperimentState* state_out) {
  cfg.validate();
  const TaskStream stream = in_stage("stream construction", [&] { return build_stream(cfg); });
  StreamGuard guard(stream);
  return run_on_stream(cfg, stream, modes, guard, state_out);
}

RunReport run_experiment(const ExperimentConfig& cfg, ExperimentState* state_out) {
  const EvalMode modes[] = {cfg.mode};
  return run_experiment_modes(cfg, modes, state_out).front();
}

ProbeResult subspace_probe(const PeftPool& pool, const Backbone& backbone, const TaskStream& stream,
                           const ClassifierTrainConfig& cfg, std::uint64_t seed) {
  require(pool.size() > 0, "probe: empty module pool");
  const std::size_t T = stream.num_tasks();
  Matrix train_base;
  std::vector<int> train_labels;
  for (const auto& task : stream.tasks) {
    train_base.append_rows(backbone.extract(task.train.inputs));
    train_labels.insert(train_labels.end(), task.train.labels.begin(), task.train.labels.end());
  }
  std::vector<Matrix> test_base;
  for (const auto& task : stream.tasks) test_base.push_back(backbone.extract(task.test.inputs));

  ProbeResult out;
  out.accuracy.assign(pool.size(), std::vector<double>(T, 0.0));
  out.subspace_average.assign(pool.size(), 0.0);
  parallel_for(pool.size(), [&](std::size_t k) {
    const Matrix feats = pool[k].forward(train_base);
    SubspaceClassifier clf(static_cast<int>(k), backbone.output_dim());
    clf.expand_head(stream.num_classes());
    GaussStore empty;
    RngStream rng(seed, "probe/k" + std::to_string(k));
    finetune_classifier(clf, feats, train_labels, empty,
                        ReplayBatchPlan{1.0, 0}, cfg, rng);
    double sum = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
      const auto pred = argmax_rows(clf.logits(pool[k].forward(test_base[j])));
      out.accuracy[k][j] = accuracy(pred, stream.tasks[j].test.labels);
      sum += out.accuracy[k][j];
    }
    out.subspace_average[k] = sum / static_cast<double>(T);
  });
  return out;
}

std::vector<std::vector<double>> expertise_analysis(std::span<const TaskEvaluation> per_task) {
  require(!per_task.empty(), "expertise: no tasks");
  const std::size_t K = per_task.front().stack.scores.size();
  std::vector<std::vector<double>> table(K, std::vector<double>(per_task.size(), 0.0));
  for (std::size_t m = 1; m <= K; ++m) {
    for (std::size_t j = 0; j < per_task.size(); ++j) {
      const auto pred = aee_predict_limited(per_task[j].stack, m).labels;
      table[m - 1][j] = accuracy(pred, per_task[j].labels);
    }
  }
  return table;
}

void save_state(const ExperimentState& state, const std::filesystem::path& dir) {
  state.backbone.save(dir / "backbone.bin");
  state.pool.save(dir / "pool.bin");
  state.store.save(dir / "store.bin");
  save_classifiers(state.classifiers, dir / "classifiers.bin");
  if (!state.misaligned_heads.empty()) save_classifiers(state.misaligned_heads, dir / "misaligned_heads.bin");
}

}  // namespace secl
