#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "secl/data.hpp"
#include "secl/gauss_store.hpp"
#include "secl/linear.hpp"
#include "secl/optim.hpp"

namespace secl {

enum class ScoreKind { probability, logit };

std::string to_string(ScoreKind k);
ScoreKind score_kind_from_string(const std::string& s);

/// Linear head over one subspace covering every class seen so far. Output
/// rows are grouped by task: ranges()[t] is the sub-head for task t.
class SubspaceClassifier {
 public:
  SubspaceClassifier() = default;
  SubspaceClassifier(int subspace, std::size_t dim) : subspace_(subspace), head_(dim, 0) {}

  int subspace() const { return subspace_; }
  std::size_t dim() const { return head_.in_dim(); }
  int num_classes() const { return static_cast<int>(head_.out_dim()); }
  const std::vector<TaskRange>& ranges() const { return ranges_; }

  /// Appends zero rows for a new task's classes; existing rows are untouched.
  void expand_head(int new_classes);

  Matrix logits(const Matrix& features) const;

  Linear& head() { return head_; }
  const Linear& head() const { return head_; }

  friend bool operator==(const SubspaceClassifier& a, const SubspaceClassifier& b);

 private:
  int subspace_ = 0;
  Linear head_;
  std::vector<TaskRange> ranges_;
};

/// Softmax probabilities (or raw logits) over the full output.
Matrix score(const SubspaceClassifier& clf, const Matrix& features,
             ScoreKind kind = ScoreKind::probability);

/// How much replay goes into each fine-tuning epoch.
struct ReplayBatchPlan {
  /// Fraction of the current task's real samples used per epoch.
  double real_fraction = 1.0;
  /// Synthetic samples drawn per old class per epoch.
  std::size_t synthetic_per_class = 0;

  /// ceil(real samples / current classes): old classes get as many samples
  /// per epoch as an average current class.
  static ReplayBatchPlan balanced(std::size_t real_samples, std::size_t current_classes);
};

struct ClassifierTrainConfig {
  OptimKind optimizer = OptimKind::sgd;
  double lr = 0.1;
  std::size_t epochs = 30;
  std::size_t batch = 64;
};

/// Fine-tunes `clf` on real features of the newest task (its last range) plus
/// Gaussian replay of every older class, sampled from the store's effective
/// Gaussian for this classifier's subspace. Continues from the current
/// weights. Returns the mean loss of each epoch.
std::vector<double> finetune_classifier(SubspaceClassifier& clf, const Matrix& current_features,
                                        std::span<const int> labels, const GaussStore& store,
                                        const ReplayBatchPlan& plan, const ClassifierTrainConfig& cfg,
                                        RngStream& rng);

void save_classifiers(const std::vector<SubspaceClassifier>& bank, const std::filesystem::path& path);
std::vector<SubspaceClassifier> load_classifiers(const std::filesystem::path& path);

}  // namespace secl
