#include "secl/classifiers.hpp"

#include <algorithm>
#include <cmath>

#include "secl/binary_io.hpp"
#include "secl/error.hpp"
#include "secl/loss.hpp"

namespace secl {

std::string to_string(ScoreKind k) { return k == ScoreKind::probability ? "probability" : "logit"; }

ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "probability") return ScoreKind::probability;
  if (s == "logit") return ScoreKind::logit;
  throw Error("unknown score kind '" + s + "'");
}

void SubspaceClassifier::expand_head(int new_classes) {
  require(new_classes > 0, "expand_head: need at least one new class");
  const std::size_t old = head_.out_dim();
  const std::size_t total = old + static_cast<std::size_t>(new_classes);
  Linear grown(dim(), total);
  std::copy(head_.weight.values().begin(), head_.weight.values().end(), grown.weight.values().begin());
  std::copy(head_.bias.values().begin(), head_.bias.values().end(), grown.bias.values().begin());
  head_ = std::move(grown);
  ranges_.push_back({static_cast<int>(old), static_cast<int>(total)});
}

Matrix SubspaceClassifier::logits(const Matrix& features) const {
  require(features.cols() == dim(), "classifier: feature dim mismatch");
  return head_.forward(features);
}

bool operator==(const SubspaceClassifier& a, const SubspaceClassifier& b) {
  return a.subspace_ == b.subspace_ && a.ranges_ == b.ranges_ && a.head_.weight == b.head_.weight &&
         a.head_.bias == b.head_.bias;
}

Matrix score(const SubspaceClassifier& clf, const Matrix& features, ScoreKind kind) {
  Matrix z = clf.logits(features);
  return kind == ScoreKind::probability ? softmax_rows(z) : z;
}

ReplayBatchPlan ReplayBatchPlan::balanced(std::size_t real_samples, std::size_t current_classes) {
  require(current_classes > 0, "replay plan: no current classes");
  return {1.0, (real_samples + current_classes - 1) / current_classes};
}

std::vector<double> finetune_classifier(SubspaceClassifier& clf, const Matrix& current_features,
                                        std::span<const int> labels, const GaussStore& store,
                                        const ReplayBatchPlan& plan, const ClassifierTrainConfig& cfg,
                                        RngStream& rng) {
  require(!clf.ranges().empty(), "finetune_classifier: head covers no task");
  require(current_features.rows() == labels.size() && !labels.empty(),
          "finetune_classifier: feature/label count mismatch");
  require(cfg.epochs > 0 && cfg.batch > 0 && cfg.lr > 0.0, "finetune_classifier: invalid schedule");
  require(plan.real_fraction > 0.0 && plan.real_fraction <= 1.0,
          "finetune_classifier: real fraction must be in (0, 1]");
  const TaskRange current = clf.ranges().back();
  for (int y : labels) require(current.contains(y), "finetune_classifier: label outside the newest task");
  const int old_classes = current.begin;
  for (int c = 0; c < old_classes; ++c) {
    if (!store.has_class(c)) {
      throw Error("finetune_classifier: store missing old class " + std::to_string(c));
    }
  }
  // Effective Gaussians are fixed for the whole fine-tune.
  std::vector<ClassGaussian> replay;
  for (int c = 0; c < old_classes; ++c) replay.push_back(store.effective_gaussian(clf.subspace(), c));

  const std::size_t n_real = current_features.rows();
  const auto real_per_epoch = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(plan.real_fraction * static_cast<double>(n_real))));
  const std::size_t n_syn = static_cast<std::size_t>(old_classes) * plan.synthetic_per_class;
  const std::size_t n_total = real_per_epoch + n_syn;

  OptimState opt = OptimState::make(cfg.optimizer, cfg.lr);
  RngStream sample_rng = rng.child("replay");
  RngStream order_rng = rng.child("order");
  std::vector<double> losses;
  Matrix epoch_x(n_total, clf.dim());
  std::vector<int> epoch_y(n_total);
  std::vector<std::size_t> real_idx(n_real);
  for (std::size_t i = 0; i < n_real; ++i) real_idx[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (real_per_epoch < n_real) order_rng.shuffle(real_idx);
    for (std::size_t i = 0; i < real_per_epoch; ++i) {
      auto src = current_features.row(real_idx[i]);
      std::copy(src.begin(), src.end(), epoch_x.row(i).begin());
      epoch_y[i] = labels[real_idx[i]];
    }
    std::size_t row = real_per_epoch;
    for (const ClassGaussian& g : replay) {
      for (std::size_t s = 0; s < plan.synthetic_per_class; ++s, ++row) {
        auto dst = epoch_x.row(row);
        for (std::size_t j = 0; j < dst.size(); ++j) {
          dst[j] = g.mean[j] + std::sqrt(g.var[j]) * sample_rng.normal();
        }
        epoch_y[row] = g.cls;
      }
    }

    const auto perm = order_rng.permutation(n_total);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_total; start += cfg.batch) {
      const std::size_t end = std::min(n_total, start + cfg.batch);
      std::span<const std::size_t> idx(perm.data() + start, end - start);
      const Matrix x = epoch_x.gather_rows(idx);
      std::vector<int> y;
      y.reserve(idx.size());
      for (std::size_t i : idx) y.push_back(epoch_y[i]);
      auto ce = softmax_cross_entropy(clf.head().forward(x), y);
      epoch_loss += ce.loss * static_cast<double>(idx.size());
      auto g = clf.head().backward(x, ce.grad, false);
      std::vector<Matrix*> params{&clf.head().weight, &clf.head().bias};
      std::vector<const Matrix*> grads{&g.weight, &g.bias};
      optimizer_step(params, grads, opt);
    }
    losses.push_back(epoch_loss / static_cast<double>(n_total));
  }
  return losses;
}

void save_classifiers(const std::vector<SubspaceClassifier>& bank, const std::filesystem::path& path) {
  BinaryWriter w("classifier_bank");
  w.u64(bank.size());
  for (const auto& c : bank) {
    w.i64(c.subspace());
    w.matrix(c.head().weight);
    w.matrix(c.head().bias);
    std::vector<int> bounds;
    for (const auto& r : c.ranges()) {
      bounds.push_back(r.begin);
      bounds.push_back(r.end);
    }
    w.ints(bounds);
  }
  w.save(path);
}

std::vector<SubspaceClassifier> load_classifiers(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path, "classifier_bank");
  std::vector<SubspaceClassifier> bank;
  const auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(r.i64());
    Matrix w = r.matrix();
    Matrix b = r.matrix();
    const auto bounds = r.ints();
    require(bounds.size() % 2 == 0, "classifier bank: malformed ranges");
    SubspaceClassifier c(k, w.cols());
    for (std::size_t j = 0; j < bounds.size(); j += 2) c.expand_head(bounds[j + 1] - bounds[j]);
    require(c.head().weight.same_shape(w) && c.head().bias.same_shape(b), "classifier bank: shape mismatch");
    c.head().weight = std::move(w);
    c.head().bias = std::move(b);
    bank.push_back(std::move(c));
  }
  return bank;
}

}  // namespace secl
