#include "secl/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "secl/error.hpp"

namespace secl {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string label)
    : seed_(seed), label_(std::move(label)) {
  // splitmix64 expands one 64-bit key into the four state words, as the
  // xoshiro authors recommend; the key mixes the seed with the label hash.
  std::uint64_t x = splitmix64(seed_) ^ fnv1a(label_);
  for (auto& w : s_) {
    w = splitmix64(x);
    x += 0x9e3779b97f4a7c15ULL;
  }
}

RngStream RngStream::with_state(const std::array<std::uint64_t, 4>& state) {
  require(state != std::array<std::uint64_t, 4>{}, "RngStream: all-zero state");
  RngStream r(0, "raw");
  r.s_ = state;
  return r;
}

RngStream RngStream::child(const std::string& sub) const {
  return RngStream(seed_, label_ + "/" + sub);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  require(n > 0, "uniform_index: empty range");
  // Rejection sampling keeps the draw unbiased for any n.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  shuffle(p);
  return p;
}

RngStream rng_stream(std::uint64_t seed, const std::string& label) { return {seed, label}; }

Matrix sample_diag_gaussian(std::span<const double> mean, std::span<const double> var,
                            std::size_t n, RngStream& rng) {
  require(mean.size() == var.size(), "sample_diag_gaussian: mean/var dimension mismatch");
  for (double v : var) require(v >= 0.0 && std::isfinite(v), "sample_diag_gaussian: invalid variance");
  const std::size_t d = mean.size();
  std::vector<double> sd(d);
  for (std::size_t j = 0; j < d; ++j) sd[j] = std::sqrt(var[j]);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double z = rng.normal();
      row[j] = sd[j] == 0.0 ? mean[j] : mean[j] + sd[j] * z;
    }
  }
  return out;
}

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, RngStream& rng) {
  Matrix out(rows, cols);
  for (double& v : out.values()) v = stddev * rng.normal();
  return out;
}

}  // namespace secl
