#include "secl/peft.hpp"

#include <cmath>

#include "secl/binary_io.hpp"
#include "secl/error.hpp"
#include "secl/loss.hpp"

namespace secl {

std::string to_string(PeftKind k) { return k == PeftKind::adapter ? "adapter" : "lora"; }

PeftKind peft_kind_from_string(const std::string& s) {
  if (s == "adapter") return PeftKind::adapter;
  if (s == "lora") return PeftKind::lora;
  throw Error("unknown peft kind '" + s + "'");
}

PeftModule::PeftModule(PeftKind kind, std::size_t dim, std::size_t rank, RngStream& rng, int task)
    : kind_(kind), task_(task) {
  if (rank == 0 || rank > dim) {
    throw Error("peft: invalid rank " + std::to_string(rank) + " for dim " + std::to_string(dim));
  }
  down_ = Linear::random(dim, rank, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  up_ = Linear(rank, dim);
}

Matrix PeftModule::forward(const Matrix& x, Cache* cache) const {
  require(x.cols() == dim(), "peft: feature dim " + std::to_string(x.cols()) + " does not match " +
                                 std::to_string(dim()));
  Matrix hidden = kind_ == PeftKind::adapter ? tanh_of(down_.forward(x)) : matmul_nt(x, down_.weight);
  Matrix out = kind_ == PeftKind::adapter ? up_.forward(hidden) : matmul_nt(hidden, up_.weight);
  out += x;
  if (cache) cache->hidden = std::move(hidden);
  return out;
}

PeftModule::Grads PeftModule::backward(const Matrix& x, const Cache& cache, const Matrix& grad_out) const {
  require(grad_out.same_shape(x), "peft: gradient shape mismatch");
  Grads g;
  g.up_weight = matmul_tn(grad_out, cache.hidden);
  g.up_bias = kind_ == PeftKind::adapter ? column_sums(grad_out) : Matrix(1, dim());
  Matrix d_hidden = matmul(grad_out, up_.weight);
  if (kind_ == PeftKind::adapter) mul_tanh_grad(d_hidden, cache.hidden);
  g.down_weight = matmul_tn(d_hidden, x);
  g.down_bias = kind_ == PeftKind::adapter ? column_sums(d_hidden) : Matrix(1, rank());
  g.input = matmul(d_hidden, down_.weight);
  g.input += grad_out;
  return g;
}

std::vector<Matrix*> PeftModule::params() {
  if (kind_ == PeftKind::lora) return {&down_.weight, &up_.weight};
  return {&down_.weight, &down_.bias, &up_.weight, &up_.bias};
}

std::vector<const Matrix*> PeftModule::grad_list(PeftKind kind, const Grads& g) {
  if (kind == PeftKind::lora) return {&g.down_weight, &g.up_weight};
  return {&g.down_weight, &g.down_bias, &g.up_weight, &g.up_bias};
}

std::size_t PeftModule::parameter_count() const {
  std::size_t n = down_.weight.size() + up_.weight.size();
  if (kind_ == PeftKind::adapter) n += down_.bias.size() + up_.bias.size();
  return n;
}

std::uint64_t PeftModule::checksum() const {
  return secl::checksum({&down_.weight, &down_.bias, &up_.weight, &up_.bias});
}

bool operator==(const PeftModule& a, const PeftModule& b) {
  return a.kind_ == b.kind_ && a.task_ == b.task_ && a.down_.weight == b.down_.weight &&
         a.down_.bias == b.down_.bias && a.up_.weight == b.up_.weight && a.up_.bias == b.up_.bias;
}

void PeftPool::append(PeftModule m) {
  if (!modules_.empty()) require(m.dim() == modules_.front().dim(), "peft pool: dimension mismatch");
  modules_.push_back(std::move(m));
}

std::uint64_t PeftPool::checksum(std::size_t count) const {
  require(count <= modules_.size(), "peft pool: checksum range out of bounds");
  std::vector<const Matrix*> mats;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& m = modules_[k];
    for (const Matrix* p : {&m.down_.weight, &m.down_.bias, &m.up_.weight, &m.up_.bias}) mats.push_back(p);
  }
  return secl::checksum(mats);
}

void PeftPool::save(const std::filesystem::path& path) const {
  BinaryWriter w("peft_pool");
  w.u64(modules_.size());
  for (const auto& m : modules_) {
    w.str(to_string(m.kind_));
    w.i64(m.task_);
    w.matrix(m.down_.weight);
    w.matrix(m.down_.bias);
    w.matrix(m.up_.weight);
    w.matrix(m.up_.bias);
  }
  w.save(path);
}

PeftPool PeftPool::load(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path, "peft_pool");
  PeftPool pool;
  const auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    PeftModule m;
    m.kind_ = peft_kind_from_string(r.str());
    m.task_ = static_cast<int>(r.i64());
    m.down_.weight = r.matrix();
    m.down_.bias = r.matrix();
    m.up_.weight = r.matrix();
    m.up_.bias = r.matrix();
    pool.modules_.push_back(std::move(m));
  }
  return pool;
}

CompositeLoss peft_composite_loss(const PeftModule& module, const AuxHeads& heads,
                                  const Matrix& features, std::span<const int> labels,
                                  const Matrix& rotated, std::span<const int> rotation_labels,
                                  double alpha, double weight_decay) {
  require(alpha >= 0.0, "peft: alpha must be non-negative");
  CompositeLoss out;

  PeftModule::Cache cache;
  const Matrix z = module.forward(features, &cache);
  auto ce = softmax_cross_entropy(heads.task.forward(z), labels);
  out.task_loss = ce.loss;
  out.task_head = heads.task.backward(z, ce.grad);
  out.module = module.backward(features, cache, out.task_head.input);

  if (alpha > 0.0) {
    require(rotated.rows() == rotation_labels.size() && rotated.rows() > 0,
            "peft: SSL term needs rotated features");
    PeftModule::Cache rot_cache;
    const Matrix zr = module.forward(rotated, &rot_cache);
    auto ssl = softmax_cross_entropy(heads.ssl.forward(zr), rotation_labels);
    out.ssl_loss = ssl.loss;
    ssl.grad *= alpha;
    out.ssl_head = heads.ssl.backward(zr, ssl.grad);
    auto g = module.backward(rotated, rot_cache, out.ssl_head.input);
    out.module.down_weight += g.down_weight;
    out.module.down_bias += g.down_bias;
    out.module.up_weight += g.up_weight;
    out.module.up_bias += g.up_bias;
  } else {
    out.ssl_head = {Matrix(heads.ssl.weight.rows(), heads.ssl.weight.cols()),
                    Matrix(1, heads.ssl.out_dim()), Matrix()};
  }

  double penalty = 0.0;
  if (weight_decay > 0.0) {
    auto add_decay = [&](Matrix& grad, const Matrix& param) {
      auto g = grad.values();
      auto p = param.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += weight_decay * p[i];
        penalty += 0.5 * weight_decay * p[i] * p[i];
      }
    };
    add_decay(out.module.down_weight, module.down().weight);
    add_decay(out.module.up_weight, module.up().weight);
    if (module.kind() == PeftKind::adapter) {
      add_decay(out.module.down_bias, module.down().bias);
      add_decay(out.module.up_bias, module.up().bias);
    }
  }
  out.loss = out.task_loss + alpha * out.ssl_loss + penalty;
  return out;
}

PeftTrainResult train_peft_module(const LabeledDataset& task_train, TaskRange classes,
                                  const Backbone& backbone, int task_index,
                                  const PeftTrainConfig& cfg, RngStream& rng) {
  task_train.validate();
  require(cfg.alpha >= 0.0, "peft: alpha must be non-negative");
  require(cfg.epochs > 0 && cfg.batch > 0, "peft: invalid training schedule");
  if (cfg.alpha > 0.0 && !task_train.is_square_image()) throw Error("SSL requires image inputs");

  const std::size_t n = task_train.size();
  const std::size_t d = backbone.output_dim();
  std::vector<int> local(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(classes.contains(task_train.labels[i]), "peft: sample label outside the task's classes");
    local[i] = task_train.labels[i] - classes.begin;
  }

  const Matrix features = backbone.extract(task_train.inputs);
  // rotated_by_turn[k] holds backbone features of every image turned k times.
  std::vector<Matrix> rotated_by_turn;
  if (cfg.alpha > 0.0) {
    rotated_by_turn.push_back(features);
    for (int k = 1; k < 4; ++k) {
      rotated_by_turn.push_back(backbone.extract(rotate_batch(task_train.inputs, task_train.image_rows, k)));
    }
  }

  RngStream init_rng = rng.child("init");
  PeftTrainResult result;
  result.module = PeftModule(cfg.kind, d, cfg.rank, init_rng, task_index);
  AuxHeads heads{Linear::random(d, static_cast<std::size_t>(classes.size()), 0.01, init_rng),
                 Linear::random(d, 4, 0.01, init_rng)};

  OptimState opt = OptimState::make(cfg.optimizer, cfg.lr);
  RngStream order_rng = rng.child("order");
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto perm = order_rng.permutation(n);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t end = std::min(n, start + cfg.batch);
      std::span<const std::size_t> idx(perm.data() + start, end - start);
      const Matrix x = features.gather_rows(idx);
      std::vector<int> y;
      for (std::size_t i : idx) y.push_back(local[i]);

      Matrix rot;
      std::vector<int> rot_labels;
      if (cfg.alpha > 0.0) {
        for (int k = 0; k < 4; ++k) {
          rot.append_rows(rotated_by_turn[static_cast<std::size_t>(k)].gather_rows(idx));
          rot_labels.insert(rot_labels.end(), idx.size(), k);
        }
      }

      auto lg = peft_composite_loss(result.module, heads, x, y, rot, rot_labels, cfg.alpha,
                                    cfg.train_module ? cfg.weight_decay : 0.0);
      epoch_loss += lg.loss * static_cast<double>(idx.size());

      std::vector<Matrix*> params{&heads.task.weight, &heads.task.bias};
      std::vector<const Matrix*> grads{&lg.task_head.weight, &lg.task_head.bias};
      if (cfg.alpha > 0.0) {
        params.insert(params.end(), {&heads.ssl.weight, &heads.ssl.bias});
        grads.insert(grads.end(), {&lg.ssl_head.weight, &lg.ssl_head.bias});
      }
      if (cfg.train_module) {
        for (Matrix* p : result.module.params()) params.push_back(p);
        for (const Matrix* g : PeftModule::grad_list(cfg.kind, lg.module)) grads.push_back(g);
      }
      optimizer_step(params, grads, opt);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }

  const auto pred = argmax_rows(heads.task.forward(result.module.forward(features)));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += pred[i] == local[i];
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

}  // namespace secl
