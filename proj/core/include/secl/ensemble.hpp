#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "secl/classifiers.hpp"
#include "secl/data.hpp"
#include "secl/matrix.hpp"

namespace secl {

/// Scores of one batch from every subspace classifier. scores[k] is n x C
/// over the same ordered class set; ranges[t] is task t's slice.
struct ScoreStack {
  std::vector<Matrix> scores;
  std::vector<TaskRange> ranges;

  std::size_t batch() const { return scores.empty() ? 0 : scores.front().rows(); }
  /// Shapes agree and ranges tile the class space.
  void validate() const;
};

struct EnsembleOutput {
  Matrix scores;  // n x C concatenation of the per-task ensemble results
  std::vector<int> labels;
};

/// Adaptive expertise ensemble: task t's slice is the mean of Z_k[t] over
/// subspaces k <= t only; prediction is the argmax of the concatenation
/// (ties to the lowest class index). Needs one subspace per task.
EnsembleOutput aee_predict(const ScoreStack& stack);

/// AEE restricted to the first `max_subspaces` subspaces: task t averages
/// k <= min(t, max_subspaces - 1).
EnsembleOutput aee_predict_limited(const ScoreStack& stack, std::size_t max_subspaces);

/// Every task slice averaged over all subspaces.
EnsembleOutput simple_ensemble_predict(const ScoreStack& stack);

/// Subspace 0 alone.
EnsembleOutput no_ensemble_predict(const ScoreStack& stack);

/// Fixed per-task heads: heads[t] was trained on task t only, in subspace t,
/// and covers that task's classes. Each head's logits fill its task's range
/// of the concatenated output.
std::vector<int> misaligned_predict(const std::vector<SubspaceClassifier>& heads,
                                    const std::vector<Matrix>& features_by_subspace,
                                    const std::vector<TaskRange>& ranges);

}  // namespace secl
