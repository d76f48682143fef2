#include "secl/backbone.hpp"

#include <cmath>

#include "secl/binary_io.hpp"
#include "secl/error.hpp"
#include "secl/loss.hpp"
#include "secl/optim.hpp"

namespace secl {

std::string to_string(BackboneKind k) {
  return k == BackboneKind::random_projection ? "random_projection" : "frozen_pretrained_mlp";
}

BackboneKind backbone_kind_from_string(const std::string& s) {
  if (s == "random_projection") return BackboneKind::random_projection;
  if (s == "frozen_pretrained_mlp") return BackboneKind::frozen_pretrained_mlp;
  throw Error("unknown backbone kind '" + s + "'");
}

Matrix tanh_of(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

void mul_tanh_grad(Matrix& grad, const Matrix& tanh_out) {
  auto g = grad.values();
  auto y = tanh_out.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
}

Backbone Backbone::random_projection(std::size_t input_dim, const BackboneSpec& spec, RngStream& rng) {
  require(input_dim > 0 && spec.output_dim > 0, "backbone: dimensions must be positive");
  require(spec.gain > 0.0, "backbone: gain must be positive");
  Backbone b;
  b.kind_ = BackboneKind::random_projection;
  // N(0, 1/d) entries keep E|Wx|^2 = |x|^2.
  Linear layer = Linear::random(input_dim, spec.output_dim,
                                spec.gain / std::sqrt(static_cast<double>(spec.output_dim)), rng);
  layer.bias = random_normal(1, spec.output_dim, 0.1, rng);
  b.layers_.push_back(std::move(layer));
  b.provenance_ = "random_projection seed=" + std::to_string(rng.seed()) + " stream=" + rng.label();
  return b;
}

Backbone Backbone::pretrained_mlp(const LabeledDataset& pretrain, const BackboneSpec& spec,
                                  RngStream& rng, double* final_accuracy) {
  pretrain.validate();
  require(spec.hidden_dim > 0 && spec.output_dim > 0, "backbone: dimensions must be positive");
  require(spec.pretrain_epochs > 0 && spec.pretrain_batch > 0, "backbone: invalid pretraining schedule");
  const std::size_t in = pretrain.input_dim();
  RngStream init = rng.child("init");
  Linear l1 = Linear::random(in, spec.hidden_dim, 1.0 / std::sqrt(static_cast<double>(in)), init);
  Linear l2 = Linear::random(spec.hidden_dim, spec.output_dim,
                             1.0 / std::sqrt(static_cast<double>(spec.hidden_dim)), init);
  Linear head(spec.output_dim, static_cast<std::size_t>(pretrain.num_classes));

  OptimState opt = OptimState::adam(spec.pretrain_lr);
  RngStream order_rng = rng.child("order");
  const std::size_t n = pretrain.size();
  for (std::size_t epoch = 0; epoch < spec.pretrain_epochs; ++epoch) {
    const auto perm = order_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += spec.pretrain_batch) {
      const std::size_t end = std::min(n, start + spec.pretrain_batch);
      std::span<const std::size_t> idx(perm.data() + start, end - start);
      const Matrix x = pretrain.inputs.gather_rows(idx);
      std::vector<int> y;
      for (std::size_t i : idx) y.push_back(pretrain.labels[i]);

      const Matrix h1 = tanh_of(l1.forward(x));
      const Matrix h2 = tanh_of(l2.forward(h1));
      const Matrix logits = head.forward(h2);

      auto ce = softmax_cross_entropy(logits, y);
      auto g_head = head.backward(h2, ce.grad);
      mul_tanh_grad(g_head.input, h2);
      auto g2 = l2.backward(h1, g_head.input);
      mul_tanh_grad(g2.input, h1);
      auto g1 = l1.backward(x, g2.input, false);

      std::vector<Matrix*> params{&l1.weight, &l1.bias, &l2.weight, &l2.bias, &head.weight, &head.bias};
      std::vector<const Matrix*> grads{&g1.weight, &g1.bias, &g2.weight, &g2.bias, &g_head.weight, &g_head.bias};
      optimizer_step(params, grads, opt);
    }
  }

  Backbone b;
  b.kind_ = BackboneKind::frozen_pretrained_mlp;
  b.layers_ = {std::move(l1), std::move(l2)};
  b.provenance_ = "frozen_pretrained_mlp seed=" + std::to_string(rng.seed()) + " stream=" + rng.label() +
                  " pretrain_samples=" + std::to_string(n) +
                  " pretrain_classes=" + std::to_string(pretrain.num_classes) +
                  " epochs=" + std::to_string(spec.pretrain_epochs);
  if (final_accuracy) {
    const Matrix logits = head.forward(b.extract(pretrain.inputs));
    const auto pred = argmax_rows(logits);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += pred[i] == pretrain.labels[i];
    *final_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  }
  return b;
}

Matrix Backbone::extract(const Matrix& inputs) const {
  require(!layers_.empty(), "backbone: not initialised");
  require(inputs.cols() == input_dim(), "backbone: input dim " + std::to_string(inputs.cols()) +
                                            " does not match " + std::to_string(input_dim()));
  Matrix h = inputs;
  for (const auto& layer : layers_) h = tanh_of(layer.forward(h));
  return h;
}

std::uint64_t Backbone::checksum() const {
  std::vector<const Matrix*> mats;
  for (const auto& l : layers_) {
    mats.push_back(&l.weight);
    mats.push_back(&l.bias);
  }
  return secl::checksum(mats);
}

void Backbone::save(const std::filesystem::path& path) const {
  BinaryWriter w("backbone");
  w.str(to_string(kind_));
  w.str(provenance_);
  w.u64(layers_.size());
  for (const auto& l : layers_) {
    w.matrix(l.weight);
    w.matrix(l.bias);
  }
  w.save(path);
}

Backbone Backbone::load(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path, "backbone");
  Backbone b;
  b.kind_ = backbone_kind_from_string(r.str());
  b.provenance_ = r.str();
  const auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    Linear l;
    l.weight = r.matrix();
    l.bias = r.matrix();
    b.layers_.push_back(std::move(l));
  }
  return b;
}

bool operator==(const Backbone& a, const Backbone& b) {
  if (a.kind_ != b.kind_ || a.provenance_ != b.provenance_ || a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) return false;
  }
  return true;
}

Backbone build_backbone(const BackboneSpec& spec, std::size_t input_dim, RngStream& rng,
                        const LabeledDataset* pretrain, double* pretrain_accuracy) {
  if (spec.kind == BackboneKind::random_projection) return Backbone::random_projection(input_dim, spec, rng);
  if (pretrain == nullptr) throw Error("backbone: frozen_pretrained_mlp requires a pretraining split");
  require(pretrain->input_dim() == input_dim, "backbone: pretraining split has the wrong input dim");
  return Backbone::pretrained_mlp(*pretrain, spec, rng, pretrain_accuracy);
}

}  // namespace secl
