#include <benchmark/benchmark.h>

#include <vector>

#include "secl/ensemble.hpp"
#include "secl/loss.hpp"
#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace {

using secl::Matrix;

Matrix draw(std::size_t r, std::size_t c, std::uint64_t seed) {
  secl::RngStream rng(seed, "bench");
  return secl::random_normal(r, c, 1.0, rng);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = draw(n, n, 1), b = draw(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(secl::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256);

void BM_MatmulNT(benchmark::State& state) {
  // Batch x features times weights^T, the shape of every forward pass.
  const Matrix x = draw(64, 64, 1), w = draw(static_cast<std::size_t>(state.range(0)), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(secl::matmul_nt(x, w));
}
BENCHMARK(BM_MatmulNT)->Arg(16)->Arg(100)->Arg(200);

void BM_MatmulTN(benchmark::State& state) {
  const Matrix g = draw(64, static_cast<std::size_t>(state.range(0)), 1), x = draw(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(secl::matmul_tn(g, x));
}
BENCHMARK(BM_MatmulTN)->Arg(16)->Arg(100)->Arg(200);

void BM_SoftmaxCrossEntropy(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  const Matrix logits = draw(64, classes, 3);
  std::vector<int> y(64);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % classes);
  for (auto _ : state) benchmark::DoNotOptimize(secl::softmax_cross_entropy(logits, y));
}
BENCHMARK(BM_SoftmaxCrossEntropy)->Arg(10)->Arg(100)->Arg(200);

void BM_AeeFusion(benchmark::State& state) {
  const auto tasks = static_cast<std::size_t>(state.range(0));
  secl::ScoreStack s;
  for (std::size_t t = 0; t < tasks; ++t) s.ranges.push_back({static_cast<int>(10 * t), static_cast<int>(10 * t + 10)});
  for (std::size_t k = 0; k < tasks; ++k) s.scores.push_back(secl::softmax_rows(draw(200, 10 * tasks, k)));
  for (auto _ : state) benchmark::DoNotOptimize(secl::aee_predict(s));
}
BENCHMARK(BM_AeeFusion)->Arg(5)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
