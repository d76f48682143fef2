// Per-task training costs on a synthetic stream.
#include <benchmark/benchmark.h>

#include "secl/backbone.hpp"
#include "secl/classifiers.hpp"
#include "secl/data.hpp"
#include "secl/gauss_store.hpp"
#include "secl/peft.hpp"

namespace {

struct Fixture {
  secl::TaskStream stream;
  secl::Backbone backbone;

  Fixture() {
    secl::SyntheticSpec spec;
    spec.tasks = 2;
    spec.input_dim = 16;
    secl::RngStream data(1993, "data/synthetic");
    stream = secl::gen_synthetic_stream(spec, data);
    secl::RngStream bb(1993, "backbone");
    backbone = secl::Backbone::random_projection(16, secl::BackboneSpec{}, bb);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_TrainPeftModule(benchmark::State& state) {
  const auto& f = fixture();
  secl::PeftTrainConfig cfg;
  cfg.kind = state.range(0) == 0 ? secl::PeftKind::adapter : secl::PeftKind::lora;
  cfg.epochs = 1;
  for (auto _ : state) {
    secl::RngStream rng(1, "peft/task0");
    benchmark::DoNotOptimize(
        secl::train_peft_module(f.stream.tasks[0].train, f.stream.tasks[0].classes, f.backbone, 0, cfg, rng));
  }
}
BENCHMARK(BM_TrainPeftModule)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FinetuneClassifier(benchmark::State& state) {
  // Second task: real features of 10 new classes plus replay of 10 old ones.
  const auto& f = fixture();
  const secl::Matrix old_feats = f.backbone.extract(f.stream.tasks[0].train.inputs);
  secl::GaussStore store;
  store.record_task_gaussians(0, {old_feats}, f.stream.tasks[0].train.labels);
  const secl::Matrix feats = f.backbone.extract(f.stream.tasks[1].train.inputs);
  const auto& labels = f.stream.tasks[1].train.labels;
  secl::ClassifierTrainConfig cfg;
  cfg.epochs = 1;
  const auto plan = secl::ReplayBatchPlan::balanced(labels.size(), 10);
  for (auto _ : state) {
    secl::SubspaceClassifier clf(0, feats.cols());
    clf.expand_head(10);
    clf.expand_head(10);
    secl::RngStream rng(1, "classifier/k0/task1");
    benchmark::DoNotOptimize(secl::finetune_classifier(clf, feats, labels, store, plan, cfg, rng));
  }
}
BENCHMARK(BM_FinetuneClassifier)->Unit(benchmark::kMillisecond);

void BM_BackboneExtract(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(f.backbone.extract(f.stream.tasks[0].train.inputs));
}
BENCHMARK(BM_BackboneExtract);

}  // namespace
