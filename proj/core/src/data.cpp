#include "secl/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "secl/error.hpp"

namespace secl {

void LabeledDataset::validate() const {
  require(!labels.empty(), "dataset is empty");
  require(inputs.rows() == labels.size(), "dataset: input/label count mismatch");
  for (int y : labels) {
    require(y >= 0 && y < num_classes, "dataset: label " + std::to_string(y) + " outside catalogue");
  }
  if (is_image()) {
    require(image_rows * image_cols == inputs.cols(), "dataset: image shape does not match inputs");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> idx) const {
  LabeledDataset out;
  out.inputs = inputs.gather_rows(idx);
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  return out;
}

std::vector<std::size_t> LabeledDataset::indices_of(int c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) out.push_back(i);
  }
  return out;
}

std::vector<TaskRange> TaskStream::ranges() const {
  std::vector<TaskRange> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(t.classes);
  return out;
}

void TaskStream::validate() const {
  require(!tasks.empty(), "stream has no tasks");
  int next = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const TaskRange r = tasks[t].classes;
    require(r.begin == next && r.end > r.begin, "stream: task ranges must tile the class space");
    next = r.end;
    for (const LabeledDataset* ds : {&tasks[t].train, &tasks[t].test}) {
      for (int y : ds->labels) require(r.contains(y), "stream: sample label outside its task");
    }
  }
  require(next == num_classes(), "stream: class map size mismatch");
  for (int c = 0; c < num_classes(); ++c) {
    require(tasks[static_cast<std::size_t>(class_task[static_cast<std::size_t>(c)])].classes.contains(c),
            "stream: class->task map inconsistent");
  }
}

std::vector<std::size_t> task_sizes(std::size_t num_classes, const StreamLayout& layout) {
  const std::size_t T = layout.tasks;
  require(T >= 1, "stream layout: need at least one task");
  if (num_classes < T) {
    throw Error("too few classes (" + std::to_string(num_classes) + ") for " + std::to_string(T) +
                " tasks");
  }
  std::vector<std::size_t> sizes(T);
  if (layout.first_task_classes > 0) {
    const std::size_t first = layout.first_task_classes;
    require(first <= num_classes, "stream layout: first task larger than the class count");
    if (T == 1) {
      require(first == num_classes, "stream layout: single task must hold every class");
      return {first};
    }
    const std::size_t rest = num_classes - first;
    require(rest >= T - 1 && rest % (T - 1) == 0,
            "stream layout: remaining classes do not divide evenly across tasks");
    sizes[0] = first;
    std::fill(sizes.begin() + 1, sizes.end(), rest / (T - 1));
  } else {
    require(num_classes % T == 0, "stream layout: " + std::to_string(num_classes) +
                                      " classes do not divide into " + std::to_string(T) + " tasks");
    std::fill(sizes.begin(), sizes.end(), num_classes / T);
  }
  return sizes;
}

TaskStream build_task_stream(const LabeledDataset& train, const LabeledDataset& test,
                             const StreamLayout& layout) {
  train.validate();
  test.validate();
  require(train.input_dim() == test.input_dim(), "train/test input dims differ");
  require(layout.pretrain_sample_fraction >= 0.0 && layout.pretrain_sample_fraction < 1.0,
          "pretrain sample fraction must be in [0, 1)");
  const std::size_t source_classes = static_cast<std::size_t>(std::max(train.num_classes, test.num_classes));
  require(layout.pretrain_holdout_classes < source_classes, "pretrain holdout consumes every class");

  RngStream rng(layout.shuffle_seed, "stream/class-order");
  std::vector<std::size_t> order = rng.permutation(source_classes);
  const std::size_t stream_classes = source_classes - layout.pretrain_holdout_classes;
  const auto sizes = task_sizes(stream_classes, layout);

  TaskStream out;
  std::vector<int> global_of(source_classes, -1);
  for (std::size_t g = 0; g < stream_classes; ++g) {
    global_of[order[g]] = static_cast<int>(g);
    out.class_source.push_back(static_cast<int>(order[g]));
  }

  // Samples moved from stream training data into the pretraining split.
  std::vector<bool> to_pretrain(train.size(), false);
  if (layout.pretrain_sample_fraction > 0.0) {
    RngStream split_rng(layout.shuffle_seed, "stream/pretrain-split");
    for (std::size_t g = 0; g < stream_classes; ++g) {
      auto idx = train.indices_of(static_cast<int>(order[g]));
      split_rng.shuffle(idx);
      const auto take = static_cast<std::size_t>(std::floor(layout.pretrain_sample_fraction *
                                                            static_cast<double>(idx.size())));
      for (std::size_t i = 0; i < take && i + 1 < idx.size(); ++i) to_pretrain[idx[i]] = true;
    }
  }
  if (layout.pretrain_holdout_classes > 0 || layout.pretrain_sample_fraction > 0.0) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (to_pretrain[i] || global_of[static_cast<std::size_t>(train.labels[i])] < 0) idx.push_back(i);
    }
    out.pretrain = train.subset(idx);
  }

  int begin = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    TaskData task;
    task.classes = {begin, begin + static_cast<int>(sizes[t])};
    auto carve = [&](const LabeledDataset& src, bool is_train) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (is_train && to_pretrain[i]) continue;
        const int g = global_of[static_cast<std::size_t>(src.labels[i])];
        if (g >= 0 && task.classes.contains(g)) idx.push_back(i);
      }
      LabeledDataset ds = src.subset(idx);
      for (int& y : ds.labels) y = global_of[static_cast<std::size_t>(y)];
      ds.num_classes = static_cast<int>(stream_classes);
      return ds;
    };
    task.train = carve(train, true);
    task.test = carve(test, false);
    require(task.train.size() > 0, "task " + std::to_string(t) + " has no training samples");
    require(task.test.size() > 0, "task " + std::to_string(t) + " has no test samples");
    for (int c = task.classes.begin; c < task.classes.end; ++c) out.class_task.push_back(static_cast<int>(t));
    begin = task.classes.end;
    out.tasks.push_back(std::move(task));
  }
  out.validate();
  return out;
}

std::vector<double> synthetic_class_mean(const SyntheticSpec& spec, std::size_t task,
                                         std::size_t local) {
  std::vector<double> mean(spec.input_dim, 0.0);
  const std::size_t base = task * spec.block_dims;
  for (std::size_t i = 0; i < spec.block_dims; ++i) {
    mean[base + i] = ((local >> i) & 1U) ? 1.0 : -1.0;
  }
  return mean;
}

TaskStream gen_synthetic_stream(const SyntheticSpec& spec, RngStream& rng) {
  require(spec.tasks >= 1 && spec.classes_per_task >= 1, "synthetic: need tasks and classes");
  require(spec.block_dims >= 1 && spec.block_dims < 31, "synthetic: block dims out of range");
  require(spec.input_dim >= spec.tasks * spec.block_dims,
          "synthetic: input_dim must be at least tasks * block_dims");
  require((std::size_t{1} << spec.block_dims) >= spec.classes_per_task,
          "synthetic: block too small to give every class a distinct mean");
  require(spec.noise >= 0.0, "synthetic: noise must be non-negative");
  require(spec.samples_per_class >= 2, "synthetic: need at least two samples per class");

  const std::size_t n_train = std::max<std::size_t>(1, spec.samples_per_class * 4 / 5);
  const std::size_t n_test = spec.samples_per_class - n_train;
  const std::size_t d = spec.input_dim;
  const int total = static_cast<int>(spec.tasks * spec.classes_per_task);

  auto draw = [&](const std::vector<double>& mean, Matrix& dst, std::size_t row) {
    auto r = dst.row(row);
    for (std::size_t j = 0; j < d; ++j) r[j] = mean[j] + spec.noise * rng.normal();
  };

  TaskStream out;
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    TaskData task;
    const int begin = static_cast<int>(t * spec.classes_per_task);
    task.classes = {begin, begin + static_cast<int>(spec.classes_per_task)};
    task.train.inputs = Matrix(n_train * spec.classes_per_task, d);
    task.test.inputs = Matrix(n_test * spec.classes_per_task, d);
    for (std::size_t c = 0; c < spec.classes_per_task; ++c) {
      const auto mean = synthetic_class_mean(spec, t, c);
      const int label = begin + static_cast<int>(c);
      for (std::size_t s = 0; s < n_train; ++s) {
        draw(mean, task.train.inputs, c * n_train + s);
        task.train.labels.push_back(label);
      }
      for (std::size_t s = 0; s < n_test; ++s) {
        draw(mean, task.test.inputs, c * n_test + s);
        task.test.labels.push_back(label);
      }
      out.class_task.push_back(static_cast<int>(t));
      out.class_source.push_back(label);
    }
    task.train.num_classes = total;
    task.test.num_classes = total;
    out.tasks.push_back(std::move(task));
  }

  if (spec.pretrain_classes > 0) {
    LabeledDataset pre;
    pre.num_classes = static_cast<int>(spec.pretrain_classes);
    pre.inputs = Matrix(spec.pretrain_classes * n_train, d);
    RngStream mean_rng = rng.child("pretrain-means");
    for (std::size_t c = 0; c < spec.pretrain_classes; ++c) {
      // Dense sign patterns: never equal to a stream mean, which is zero
      // outside a single block.
      std::vector<double> mean(d);
      for (double& m : mean) m = mean_rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t s = 0; s < n_train; ++s) {
        draw(mean, pre.inputs, c * n_train + s);
        pre.labels.push_back(static_cast<int>(c));
      }
    }
    out.pretrain = std::move(pre);
  }
  out.validate();
  return out;
}

std::vector<double> rotate90(std::span<const double> image, std::size_t side, int quarter_turns) {
  require(side > 0 && image.size() == side * side, "rotate90: image must be square");
  const int k = ((quarter_turns % 4) + 4) % 4;
  std::vector<double> cur(image.begin(), image.end());
  std::vector<double> next(cur.size());
  for (int turn = 0; turn < k; ++turn) {
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) next[i * side + j] = cur[j * side + (side - 1 - i)];
    }
    std::swap(cur, next);
  }
  return cur;
}

Matrix rotate_batch(const Matrix& images, std::size_t side, int quarter_turns) {
  require(side * side == images.cols(), "rotate_batch: images must be square");
  Matrix out(images.rows(), images.cols());
  for (std::size_t r = 0; r < images.rows(); ++r) {
    const auto rotated = rotate90(images.row(r), side, quarter_turns);
    std::copy(rotated.begin(), rotated.end(), out.row(r).begin());
  }
  return out;
}

void StreamGuard::begin_task(std::size_t t) {
  require(t < stream_->num_tasks(), "StreamGuard: task index out of range");
  require(t >= current_ && t <= current_ + 1, "StreamGuard: tasks must be learned in order");
  current_ = t;
}

void StreamGuard::check(std::size_t t, bool test_split) const {
  log_.push_back({current_, t, test_split});
  if (t > current_) {
    throw Error("continual-learning violation: read of task " + std::to_string(t) +
                " while learning task " + std::to_string(current_));
  }
}

const LabeledDataset& StreamGuard::train(std::size_t t) const {
  check(t, false);
  return stream_->tasks.at(t).train;
}

const LabeledDataset& StreamGuard::test(std::size_t t) const {
  check(t, true);
  return stream_->tasks.at(t).test;
}

TaskRange StreamGuard::classes(std::size_t t) const { return stream_->tasks.at(t).classes; }

const TaskStream& StreamGuard::offline() const {
  ++offline_reads_;
  return *stream_;
}

}  // namespace secl
