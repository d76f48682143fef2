#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "secl/backbone.hpp"
#include "secl/classifiers.hpp"
#include "secl/config.hpp"
#include "secl/data.hpp"
#include "secl/ensemble.hpp"
#include "secl/gauss_store.hpp"
#include "secl/peft.hpp"
#include "secl/report.hpp"

namespace secl {

/// Everything a run learns. Kept so callers can persist or inspect it.
struct ExperimentState {
  Backbone backbone;
  PeftPool pool;
  GaussStore store;
  /// Aligned classifier per subspace.
  std::vector<SubspaceClassifier> classifiers;
  /// Per-task heads for the misaligned baseline.
  std::vector<SubspaceClassifier> misaligned_heads;
};

/// Stream described by the config (synthetic draw or IDX split).
TaskStream build_stream(const ExperimentConfig& cfg);

/// Backbone described by the config, pretrained on the stream's pretraining
/// split when the kind requires it.
Backbone build_run_backbone(const ExperimentConfig& cfg, const TaskStream& stream,
                            double* pretrain_accuracy = nullptr);

/// Learns the stream task by task through `guard` and evaluates each mode in
/// `modes` after every task. Training is shared: the modes only differ in
/// how predictions are formed, so one call yields one report per mode.
std::vector<RunReport> run_on_stream(const ExperimentConfig& cfg, const TaskStream& stream,
                                     std::span<const EvalMode> modes, StreamGuard& guard,
                                     ExperimentState* state_out = nullptr);

/// Builds stream and backbone from the config, then run_on_stream.
std::vector<RunReport> run_experiment_modes(const ExperimentConfig& cfg, std::span<const EvalMode> modes,
                                            ExperimentState* state_out = nullptr);

/// Single-mode run using cfg.mode.
RunReport run_experiment(const ExperimentConfig& cfg, ExperimentState* state_out = nullptr);

/// Offline diagnostic: for each subspace, train one classifier over every
/// task's training features and report its accuracy on each task's test set.
/// Reads all tasks, so it is not a continual-learning path.
ProbeResult subspace_probe(const PeftPool& pool, const Backbone& backbone, const TaskStream& stream,
                           const ClassifierTrainConfig& cfg, std::uint64_t seed);

/// Final-state stacks and labels of each task's test set.
struct TaskEvaluation {
  ScoreStack stack;
  std::vector<int> labels;
};

/// table[m-1][j]: accuracy on task j when AEE may use subspaces 0..m-1.
std::vector<std::vector<double>> expertise_analysis(std::span<const TaskEvaluation> per_task);

double accuracy(std::span<const int> predicted, std::span<const int> labels);
/// Mean over classes present in `labels` of the per-class accuracy.
double macro_accuracy(std::span<const int> predicted, std::span<const int> labels);

/// Writes backbone.bin, pool.bin, store.bin, classifiers.bin (and
/// misaligned_heads.bin when present).
void save_state(const ExperimentState& state, const std::filesystem::path& dir);

}  // namespace secl
