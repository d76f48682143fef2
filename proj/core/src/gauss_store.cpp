#include "secl/gauss_store.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "secl/binary_io.hpp"
#include "secl/error.hpp"

namespace secl {

ClassGaussian fit_class_gaussian(const Matrix& features, int cls, int subspace) {
  require(features.rows() >= 1, "fit_class_gaussian: empty feature set for class " + std::to_string(cls));
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  ClassGaussian g;
  g.cls = cls;
  g.subspace = subspace;
  g.count = n;
  g.mean.assign(d, 0.0);
  g.var.assign(d, kVarianceFloor);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = features.row(i);
    for (std::size_t j = 0; j < d; ++j) g.mean[j] += r[j];
  }
  for (double& m : g.mean) m /= static_cast<double>(n);
  if (n >= 2) {
    std::vector<double> ss(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = features.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = r[j] - g.mean[j];
        ss[j] += dev * dev;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      g.var[j] = std::max(kVarianceFloor, ss[j] / static_cast<double>(n - 1));
    }
  }
  return g;
}

void GaussStore::record_task_gaussians(int task, const std::vector<Matrix>& features_by_subspace,
                                       std::span<const int> labels) {
  require(task >= 0, "record_task_gaussians: negative task");
  // Fewer subspaces than task+1 is allowed for runs that only ever train the
  // first module; extra subspaces would be ones that do not exist yet.
  require(!features_by_subspace.empty() && features_by_subspace.size() <= static_cast<std::size_t>(task) + 1,
          "record_task_gaussians: need features from subspaces 0..k with k <= task");
  std::set<int> classes(labels.begin(), labels.end());
  require(!classes.empty(), "record_task_gaussians: no samples");
  for (int c : classes) {
    if (class_task_.contains(c)) {
      throw Error("record_task_gaussians: class " + std::to_string(c) + " already recorded");
    }
  }
  for (const auto& f : features_by_subspace) {
    require(f.rows() == labels.size(), "record_task_gaussians: feature/label count mismatch");
  }
  for (int c : classes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) idx.push_back(i);
    }
    for (int k = 0; k < static_cast<int>(features_by_subspace.size()); ++k) {
      entries_.emplace(std::pair{k, c},
                       fit_class_gaussian(features_by_subspace[static_cast<std::size_t>(k)].gather_rows(idx), c, k));
    }
    class_task_.emplace(c, task);
  }
}

int GaussStore::class_task(int cls) const {
  auto it = class_task_.find(cls);
  if (it == class_task_.end()) throw Error("gauss store: unknown class " + std::to_string(cls));
  return it->second;
}

ClassGaussian GaussStore::effective_gaussian(int subspace, int cls) const {
  require(subspace >= 0, "gauss store: negative subspace");
  const int home = class_task(cls);
  auto it = entries_.find({std::min(subspace, home), cls});
  if (it == entries_.end()) {
    throw Error("gauss store: no entry for subspace " + std::to_string(subspace) + " class " + std::to_string(cls));
  }
  ClassGaussian g = it->second;
  g.approximated = subspace > home;
  return g;
}

std::pair<Matrix, std::vector<int>> GaussStore::sample_class_features(int subspace, int cls, std::size_t n,
                                                                      RngStream& rng) const {
  const ClassGaussian g = effective_gaussian(subspace, cls);
  return {sample_diag_gaussian(g.mean, g.var, n, rng), std::vector<int>(n, cls)};
}

std::vector<std::pair<int, int>> GaussStore::real_keys() const {
  std::vector<std::pair<int, int>> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, _] : entries_) keys.push_back(k);
  return keys;
}

void GaussStore::save(const std::filesystem::path& path) const {
  BinaryWriter w("gauss_store");
  w.u64(class_task_.size());
  for (const auto& [c, t] : class_task_) {
    w.i64(c);
    w.i64(t);
  }
  w.u64(entries_.size());
  for (const auto& [key, g] : entries_) {
    w.i64(g.subspace);
    w.i64(g.cls);
    w.u64(g.count);
    w.doubles(g.mean);
    w.doubles(g.var);
  }
  w.save(path);
}

GaussStore GaussStore::load(const std::filesystem::path& path) {
  auto r = BinaryReader::load(path, "gauss_store");
  GaussStore s;
  const auto n_classes = r.u64();
  for (std::uint64_t i = 0; i < n_classes; ++i) {
    const int c = static_cast<int>(r.i64());
    s.class_task_[c] = static_cast<int>(r.i64());
  }
  const auto n_entries = r.u64();
  for (std::uint64_t i = 0; i < n_entries; ++i) {
    ClassGaussian g;
    g.subspace = static_cast<int>(r.i64());
    g.cls = static_cast<int>(r.i64());
    g.count = r.u64();
    g.mean = r.doubles();
    g.var = r.doubles();
    s.entries_.emplace(std::pair{g.subspace, g.cls}, std::move(g));
  }
  return s;
}

}  // namespace secl
