#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace secl {

inline constexpr double kVarianceFloor = 1e-6;

/// Diagonal Gaussian of one class's features in one subspace.
struct ClassGaussian {
  std::vector<double> mean;
  std::vector<double> var;
  std::size_t count = 0;
  int cls = 0;
  int subspace = 0;
  /// True when this entry stands in for a subspace the class was never seen in.
  bool approximated = false;

  friend bool operator==(const ClassGaussian&, const ClassGaussian&) = default;
};

/// Per-dimension mean and Bessel-corrected variance (floored at kVarianceFloor).
ClassGaussian fit_class_gaussian(const Matrix& features, int cls, int subspace);

/// Write-once store of real Gaussians keyed by (subspace, class).
///
/// Class c's data is only available while its own task T_c is being learned,
/// when subspaces 0..T_c exist, so real entries exist exactly for k <= T_c.
/// Lookups for k > T_c return the entry of subspace T_c marked approximated.
class GaussStore {
 public:
  /// Records Gaussians of every class in `labels` for subspaces
  /// 0..features_by_subspace.size()-1 (normally 0..task).
  /// `features_by_subspace[k]` holds the task's training features in
  /// subspace k, row-aligned with `labels`.
  void record_task_gaussians(int task, const std::vector<Matrix>& features_by_subspace,
                             std::span<const int> labels);

  ClassGaussian effective_gaussian(int subspace, int cls) const;

  /// n draws from effective_gaussian(subspace, cls) with labels all `cls`.
  std::pair<Matrix, std::vector<int>> sample_class_features(int subspace, int cls, std::size_t n,
                                                            RngStream& rng) const;

  bool has_class(int cls) const { return class_task_.contains(cls); }
  int class_task(int cls) const;
  std::size_t real_entry_count() const { return entries_.size(); }
  /// Keys of all real entries, in (subspace, class) order.
  std::vector<std::pair<int, int>> real_keys() const;
  const std::map<std::pair<int, int>, ClassGaussian>& entries() const { return entries_; }

  void save(const std::filesystem::path& path) const;
  static GaussStore load(const std::filesystem::path& path);

  friend bool operator==(const GaussStore&, const GaussStore&) = default;

 private:
  std::map<std::pair<int, int>, ClassGaussian> entries_;
  std::map<int, int> class_task_;
};

}  // namespace secl
