#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace secl {

/// Labelled samples. Images are stored flattened row-major, one per row, with
/// pixel values in [0, 1]; plain feature vectors leave the image shape at 0.
struct LabeledDataset {
  Matrix inputs;
  std::vector<int> labels;
  int num_classes = 0;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return inputs.cols(); }
  bool is_image() const { return image_rows > 0; }
  bool is_square_image() const { return is_image() && image_rows == image_cols; }

  /// Throws unless the shape/label invariants hold.
  void validate() const;
  LabeledDataset subset(std::span<const std::size_t> idx) const;
  /// Indices of samples whose label is `c`.
  std::vector<std::size_t> indices_of(int c) const;
};

/// Half-open range of global class indices owned by one task.
struct TaskRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(int c) const { return c >= begin && c < end; }
  friend bool operator==(const TaskRange&, const TaskRange&) = default;
};

struct TaskData {
  LabeledDataset train;
  LabeledDataset test;
  TaskRange classes;
};

/// Class-disjoint task sequence. Global class indices are assigned in task
/// order, so task t owns a contiguous range and classifier outputs can be
/// sliced per task.
struct TaskStream {
  std::vector<TaskData> tasks;
  std::vector<int> class_task;    // global class -> task index
  std::vector<int> class_source;  // global class -> label in the source data
  std::optional<LabeledDataset> pretrain;

  std::size_t num_tasks() const { return tasks.size(); }
  int num_classes() const { return static_cast<int>(class_task.size()); }
  std::vector<TaskRange> ranges() const;
  /// Class-disjointness and class->task consistency.
  void validate() const;
};

struct StreamLayout {
  std::size_t tasks = 10;
  /// Size of the first task when it differs from the rest (0: even split).
  std::size_t first_task_classes = 0;
  std::uint64_t shuffle_seed = 1993;
  /// Classes removed from the end of the shuffled order and used, with their
  /// training samples, as the pretraining split.
  std::size_t pretrain_holdout_classes = 0;
  /// Fraction of each stream class's training samples moved to the
  /// pretraining split (never touches test data).
  double pretrain_sample_fraction = 0.0;
};

/// Shuffles the class order with `shuffle_seed`, partitions it contiguously
/// into tasks and carves each task's train/test sets from the two sources.
TaskStream build_task_stream(const LabeledDataset& train, const LabeledDataset& test,
                             const StreamLayout& layout);

/// Per-task class counts implied by a layout; throws if infeasible.
std::vector<std::size_t> task_sizes(std::size_t num_classes, const StreamLayout& layout);

struct SyntheticSpec {
  std::size_t tasks = 10;
  std::size_t classes_per_task = 10;
  std::size_t input_dim = 48;
  std::size_t block_dims = 4;
  double noise = 0.5;
  std::size_t samples_per_class = 50;
  /// Extra classes, disjoint from the stream, for backbone pretraining.
  std::size_t pretrain_classes = 0;
};

/// Mean of class `local` in task `task`: +/-1 on the task's private block
/// (bit i of `local` selects the sign of coordinate i), zero elsewhere.
std::vector<double> synthetic_class_mean(const SyntheticSpec& spec, std::size_t task,
                                         std::size_t local);

/// Gaussian clusters separated only inside each task's coordinate block, with
/// isotropic noise on every coordinate. 80/20 train/test split per class.
TaskStream gen_synthetic_stream(const SyntheticSpec& spec, RngStream& rng);

/// Counter-clockwise quarter turns of a square image:
/// out[i][j] = in[j][N-1-i], applied k times.
std::vector<double> rotate90(std::span<const double> image, std::size_t side, int quarter_turns);
/// rotate90 applied to every row of a batch of flattened square images.
Matrix rotate_batch(const Matrix& images, std::size_t side, int quarter_turns);

/// Read gate over a stream that enforces the continual-learning protocol:
/// while learning task t, only tasks 0..t may be read. Every read is logged.
/// The whole stream is reachable only through offline(), which is logged
/// separately and reserved for diagnostics.
class StreamGuard {
 public:
  struct Access {
    std::size_t learning_task;
    std::size_t task;
    bool test_split;
  };

  explicit StreamGuard(const TaskStream& stream) : stream_(&stream) {}

  void begin_task(std::size_t t);
  std::size_t current_task() const { return current_; }
  std::size_t num_tasks() const { return stream_->num_tasks(); }
  std::vector<TaskRange> ranges() const { return stream_->ranges(); }
  int num_classes() const { return stream_->num_classes(); }

  const LabeledDataset& train(std::size_t t) const;
  const LabeledDataset& test(std::size_t t) const;
  TaskRange classes(std::size_t t) const;
  const std::optional<LabeledDataset>& pretrain() const { return stream_->pretrain; }

  const TaskStream& offline() const;

  const std::vector<Access>& log() const { return log_; }
  std::size_t offline_reads() const { return offline_reads_; }

 private:
  void check(std::size_t t, bool test_split) const;

  const TaskStream* stream_;
  std::size_t current_ = 0;
  mutable std::vector<Access> log_;
  mutable std::size_t offline_reads_ = 0;
};

}  // namespace secl
