#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "secl/backbone.hpp"
#include "secl/data.hpp"
#include "secl/linear.hpp"
#include "secl/optim.hpp"

namespace secl {

enum class PeftKind { adapter, lora };

std::string to_string(PeftKind k);
PeftKind peft_kind_from_string(const std::string& s);

/// Residual module on top of backbone features, defining one feature subspace.
///   adapter: y = x + up(tanh(down(x)))   (both maps affine)
///   lora:    y = x + B(A x)              (no biases)
/// `up`/B start at zero, so a fresh module is the identity map.
class PeftModule {
 public:
  PeftModule() = default;
  PeftModule(PeftKind kind, std::size_t dim, std::size_t rank, RngStream& rng, int task = 0);

  PeftKind kind() const { return kind_; }
  std::size_t dim() const { return down_.in_dim(); }
  std::size_t rank() const { return down_.out_dim(); }
  int task() const { return task_; }
  void set_task(int t) { task_ = t; }

  const Linear& down() const { return down_; }
  const Linear& up() const { return up_; }
  Linear& down() { return down_; }
  Linear& up() { return up_; }

  struct Cache {
    Matrix hidden;  // rank-dim activations
  };
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

  struct Grads {
    Matrix down_weight, down_bias, up_weight, up_bias;
    Matrix input;
  };
  Grads backward(const Matrix& x, const Cache& cache, const Matrix& grad_out) const;

  /// Trainable matrices (adapter: 4, lora: 2), in the order of grad_list().
  std::vector<Matrix*> params();
  static std::vector<const Matrix*> grad_list(PeftKind kind, const Grads& g);
  std::size_t parameter_count() const;
  std::uint64_t checksum() const;

  friend bool operator==(const PeftModule& a, const PeftModule& b);

 private:
  friend class PeftPool;
  PeftKind kind_ = PeftKind::adapter;
  int task_ = 0;
  Linear down_;
  Linear up_;
};

inline PeftModule init_peft_module(PeftKind kind, std::size_t dim, std::size_t rank, RngStream& rng) {
  return PeftModule(kind, dim, rank, rng);
}

inline Matrix subspace_forward(const PeftModule& m, const Matrix& features) { return m.forward(features); }

/// Append-only list of trained modules; module k is frozen once appended.
class PeftPool {
 public:
  void append(PeftModule m);
  std::size_t size() const { return modules_.size(); }
  const PeftModule& operator[](std::size_t k) const { return modules_.at(k); }
  /// Checksum over modules 0..count-1.
  std::uint64_t checksum(std::size_t count) const;

  void save(const std::filesystem::path& path) const;
  static PeftPool load(const std::filesystem::path& path);

  friend bool operator==(const PeftPool&, const PeftPool&) = default;

 private:
  std::vector<PeftModule> modules_;
};

/// Temporary heads used only while a module trains.
struct AuxHeads {
  Linear task;  // d -> |C_t|
  Linear ssl;   // d -> 4 quarter turns
};

struct PeftTrainConfig {
  PeftKind kind = PeftKind::adapter;
  std::size_t rank = 16;
  OptimKind optimizer = OptimKind::adam;
  double lr = 5e-4;
  std::size_t epochs = 10;
  std::size_t batch = 64;
  /// Weight of the rotation-prediction loss.
  double alpha = 0.0;
  /// L2 penalty on module parameters.
  double weight_decay = 0.0;
  /// false trains the task head alone on a frozen identity module.
  bool train_module = true;
};

struct CompositeLoss {
  double loss = 0.0;
  double task_loss = 0.0;
  double ssl_loss = 0.0;
  PeftModule::Grads module;
  Linear::Grads task_head;
  Linear::Grads ssl_head;
};

/// L = CE(task_head(P(x)), y) + alpha * CE(ssl_head(P(x_rot)), k) + wd/2 |P|^2
/// and its gradient. `rotated` holds backbone features of every sample at
/// each quarter turn and `rotation_labels` the matching turn counts; both may
/// be empty when alpha is 0.
CompositeLoss peft_composite_loss(const PeftModule& module, const AuxHeads& heads,
                                  const Matrix& features, std::span<const int> labels,
                                  const Matrix& rotated, std::span<const int> rotation_labels,
                                  double alpha, double weight_decay = 0.0);

struct PeftTrainResult {
  PeftModule module;
  std::vector<double> epoch_loss;
  /// Accuracy of (backbone, module, task head) on the training data.
  double train_accuracy = 0.0;
};

/// Trains a new module on one task's training set. Labels are taken relative
/// to `classes`. Aux heads are discarded on return.
PeftTrainResult train_peft_module(const LabeledDataset& task_train, TaskRange classes,
                                  const Backbone& backbone, int task_index,
                                  const PeftTrainConfig& cfg, RngStream& rng);

}  // namespace secl
