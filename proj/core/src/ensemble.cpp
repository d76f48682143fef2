#include "secl/ensemble.hpp"

#include <algorithm>

#include "secl/error.hpp"
#include "secl/loss.hpp"

namespace secl {
namespace {

void check_complete(const ScoreStack& stack) {
  stack.validate();
  if (stack.scores.size() != stack.ranges.size()) {
    throw Error("ensemble: incomplete stack (" + std::to_string(stack.scores.size()) + " subspaces for " +
                std::to_string(stack.ranges.size()) + " tasks)");
  }
}

// Task t's slice averages subspaces [0, upper(t)).
template <typename Upper>
EnsembleOutput fuse(const ScoreStack& stack, Upper upper) {
  const std::size_t n = stack.batch();
  const std::size_t c = stack.scores.front().cols();
  EnsembleOutput out{Matrix(n, c), {}};
  for (std::size_t t = 0; t < stack.ranges.size(); ++t) {
    const TaskRange r = stack.ranges[t];
    const std::size_t count = upper(t);
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      const Matrix& z = stack.scores[k];
      for (std::size_t i = 0; i < n; ++i) {
        for (int j = r.begin; j < r.end; ++j) {
          out.scores(i, static_cast<std::size_t>(j)) += z(i, static_cast<std::size_t>(j)) * inv;
        }
      }
    }
  }
  out.labels = argmax_rows(out.scores);
  return out;
}

}  // namespace

void ScoreStack::validate() const {
  require(!scores.empty(), "ensemble: empty score stack");
  require(!ranges.empty(), "ensemble: no task ranges");
  const std::size_t n = scores.front().rows();
  const std::size_t c = scores.front().cols();
  for (const auto& z : scores) require(z.rows() == n && z.cols() == c, "ensemble: score shapes disagree");
  int next = 0;
  for (const auto& r : ranges) {
    require(r.begin == next && r.end > r.begin, "ensemble: task ranges must tile the classes");
    next = r.end;
  }
  require(static_cast<std::size_t>(next) == c, "ensemble: ranges do not cover the score columns");
}

EnsembleOutput aee_predict(const ScoreStack& stack) {
  check_complete(stack);
  return fuse(stack, [](std::size_t t) { return t + 1; });
}

EnsembleOutput aee_predict_limited(const ScoreStack& stack, std::size_t max_subspaces) {
  check_complete(stack);
  require(max_subspaces >= 1 && max_subspaces <= stack.scores.size(),
          "ensemble: subspace limit out of range");
  return fuse(stack, [&](std::size_t t) { return std::min(t + 1, max_subspaces); });
}

EnsembleOutput simple_ensemble_predict(const ScoreStack& stack) {
  check_complete(stack);
  const std::size_t all = stack.scores.size();
  return fuse(stack, [&](std::size_t) { return all; });
}

EnsembleOutput no_ensemble_predict(const ScoreStack& stack) {
  stack.validate();
  return {stack.scores.front(), argmax_rows(stack.scores.front())};
}

std::vector<int> misaligned_predict(const std::vector<SubspaceClassifier>& heads,
                                    const std::vector<Matrix>& features_by_subspace,
                                    const std::vector<TaskRange>& ranges) {
  require(!ranges.empty(), "misaligned: no tasks");
  if (heads.size() < ranges.size()) throw Error("misaligned: missing head for a task");
  require(features_by_subspace.size() >= ranges.size(), "misaligned: missing subspace features");
  const std::size_t n = features_by_subspace.front().rows();
  const std::size_t c = static_cast<std::size_t>(ranges.back().end);
  Matrix concat(n, c);
  for (std::size_t t = 0; t < ranges.size(); ++t) {
    const TaskRange r = ranges[t];
    require(heads[t].num_classes() == r.size(), "misaligned: head size does not match its task");
    const Matrix z = heads[t].logits(features_by_subspace[t]);
    require(z.rows() == n, "misaligned: batch size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < r.size(); ++j) concat(i, static_cast<std::size_t>(r.begin + j)) = z(i, static_cast<std::size_t>(j));
    }
  }
  return argmax_rows(concat);
}

}  // namespace secl
