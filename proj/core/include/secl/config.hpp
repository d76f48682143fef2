#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "secl/backbone.hpp"
#include "secl/classifiers.hpp"
#include "secl/data.hpp"
#include "secl/peft.hpp"

namespace secl {

enum class EvalMode { aee, se, noe, misaligned, naive_base };
enum class StreamKind { synthetic, idx };

std::string to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);
std::string to_string(StreamKind k);

struct ExperimentConfig {
  StreamKind stream_kind = StreamKind::synthetic;
  StreamLayout layout;
  /// Class-order shuffle seed for image streams; 0 means "use the run seed".
  std::uint64_t shuffle_seed = 0;
  SyntheticSpec synthetic;
  std::filesystem::path train_images, train_labels, test_images, test_labels;

  BackboneSpec backbone;
  PeftTrainConfig peft;
  ClassifierTrainConfig classifier;
  ScoreKind score_kind = ScoreKind::probability;

  EvalMode mode = EvalMode::aee;
  bool expertise = true;
  bool probe = false;
  bool save_state = true;

  std::uint64_t seed = 1993;
  std::vector<std::uint64_t> sweep_seeds;
  std::vector<double> sweep_alphas;
  std::vector<EvalMode> sweep_modes;

  /// Throws with the offending key on inconsistent settings.
  void validate() const;
  std::uint64_t effective_shuffle_seed() const { return shuffle_seed == 0 ? seed : shuffle_seed; }
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// malformed values are errors. Relative IDX paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value, one `key = value` line each, in a fixed
/// order. parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const ExperimentConfig& cfg);

/// Names of all recognised keys, in echo order.
std::vector<std::string> config_keys();

}  // namespace secl
