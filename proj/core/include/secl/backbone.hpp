#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "secl/data.hpp"
#include "secl/linear.hpp"
#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace secl {

enum class BackboneKind { random_projection, frozen_pretrained_mlp };

std::string to_string(BackboneKind k);
BackboneKind backbone_kind_from_string(const std::string& s);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::random_projection;
  std::size_t output_dim = 64;
  /// Hidden width of the pretrained MLP.
  std::size_t hidden_dim = 128;
  /// Scale on the random projection weights (1 preserves input norm on average).
  double gain = 1.0;
  std::size_t pretrain_epochs = 30;
  double pretrain_lr = 1e-3;
  std::size_t pretrain_batch = 64;
};

/// Frozen feature extractor standing in for the pre-trained model. Every layer
/// is affine followed by tanh; weights never change after construction.
class Backbone {
 public:
  Backbone() = default;

  static Backbone random_projection(std::size_t input_dim, const BackboneSpec& spec, RngStream& rng);
  /// Trains an MLP classifier on `pretrain`, keeps its hidden layers and
  /// drops the head. `final_accuracy`, when given, receives the training
  /// accuracy reached before freezing.
  static Backbone pretrained_mlp(const LabeledDataset& pretrain, const BackboneSpec& spec,
                                 RngStream& rng, double* final_accuracy = nullptr);

  BackboneKind kind() const { return kind_; }
  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  const std::string& provenance() const { return provenance_; }
  const std::vector<Linear>& layers() const { return layers_; }

  /// n x output_dim embedding; rows are independent of batch composition.
  Matrix extract(const Matrix& inputs) const;

  std::uint64_t checksum() const;

  void save(const std::filesystem::path& path) const;
  static Backbone load(const std::filesystem::path& path);

  friend bool operator==(const Backbone& a, const Backbone& b);

 private:
  BackboneKind kind_ = BackboneKind::random_projection;
  std::string provenance_;
  std::vector<Linear> layers_;
};

/// Builds the configured kind; the pretrained kind requires `pretrain`.
Backbone build_backbone(const BackboneSpec& spec, std::size_t input_dim, RngStream& rng,
                        const LabeledDataset* pretrain = nullptr, double* pretrain_accuracy = nullptr);

inline Matrix extract_features(const Backbone& b, const Matrix& inputs) { return b.extract(inputs); }

/// Elementwise tanh and its derivative expressed through the output.
Matrix tanh_of(const Matrix& m);
void mul_tanh_grad(Matrix& grad, const Matrix& tanh_out);

}  // namespace secl
