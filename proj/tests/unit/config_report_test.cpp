#include <fstream>

#include <gtest/gtest.h>

#include "secl/config.hpp"
#include "secl/error.hpp"
#include "secl/format.hpp"
#include "secl/report.hpp"
#include "test_util.hpp"

namespace secl {
namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Config, DefaultsRoundTripThroughText) {
  const ExperimentConfig c;
  const std::string text = config_to_text(c);
  EXPECT_EQ(config_to_text(parse_config(text)), text);
  for (const auto& key : config_keys()) EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
}

TEST(Config, ParsesValuesAndComments) {
  const auto c = parse_config(
      "# comment\n"
      "peft.kind = lora   # inline\n"
      "peft.rank=4\n"
      "\n"
      "peft.alpha = 0.25\n"
      "eval.mode = se\n"
      "sweep.seeds = 1, 2,3\n"
      "sweep.modes = aee,noe\n");
  EXPECT_EQ(c.peft.kind, PeftKind::lora);
  EXPECT_EQ(c.peft.rank, 4u);
  EXPECT_EQ(c.peft.alpha, 0.25);
  EXPECT_EQ(c.mode, EvalMode::se);
  EXPECT_EQ(c.sweep_seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.sweep_modes, (std::vector<EvalMode>{EvalMode::aee, EvalMode::noe}));
  EXPECT_EQ(config_to_text(parse_config(config_to_text(c))), config_to_text(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_NE(error_of([] { parse_config("peft.rnak = 4\n"); }).find("peft.rnak"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config("peft.rank = four\n"); }).find("peft.rank"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config("peft.alpha = -1\n").validate(); }).find("peft.alpha"), std::string::npos);
  EXPECT_NE(error_of([] { parse_config("eval.mode = best\n"); }).find("eval.mode"), std::string::npos);
  EXPECT_FALSE(error_of([] { parse_config("just some words\n"); }).empty());
}

TEST(Config, RelativeIdxPathsResolveAgainstBaseDir) {
  const auto c = parse_config("stream.kind = idx\nidx.train_images = a/b\n", "/base");
  EXPECT_EQ(c.train_images, std::filesystem::path("/base/a/b"));
}

TEST(Config, ModeNamesRoundTrip) {
  for (EvalMode m : {EvalMode::aee, EvalMode::se, EvalMode::noe, EvalMode::misaligned, EvalMode::naive_base})
    EXPECT_EQ(eval_mode_from_string(to_string(m)), m);
  EXPECT_THROW(eval_mode_from_string("AEE!"), Error);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 0.6000000000000001, 1e-300, 123456.789})
    EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Metrics, LastAndAverage) {
  const std::vector<double> a{1.0, 0.5};
  const Metrics m = compute_metrics(a);
  EXPECT_EQ(m.laa, 0.5);
  EXPECT_EQ(m.iaa, 0.75);
  const std::vector<double> one{0.3};
  EXPECT_EQ(compute_metrics(one).laa, 0.3);
  EXPECT_EQ(compute_metrics(one).iaa, 0.3);
  EXPECT_THROW(compute_metrics(std::vector<double>{}), Error);
}

TEST(Metrics, IaaBoundsOnRandomSequences) {
  RngStream r(3, "metrics");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + r.uniform_index(10));
    for (double& v : a) v = r.uniform();
    const Metrics m = compute_metrics(a);
    EXPECT_LE(m.iaa, *std::max_element(a.begin(), a.end()) + 1e-15);
    EXPECT_GE(m.iaa, *std::min_element(a.begin(), a.end()) - 1e-15);
    EXPECT_EQ(m.laa, a.back());
  }
}

RunReport sample_report() {
  RunReport r;
  r.mode = EvalMode::se;
  r.seed = 42;
  r.acc = {{0.9}, {0.7, 0.8}};
  r.acc_macro = {{0.91}, {0.71, 0.81}};
  r.step_accuracy = {0.9, 0.75};
  r.step_accuracy_macro = {0.91, 0.76};
  const Metrics m = compute_metrics(r.step_accuracy);
  r.laa = m.laa;
  r.iaa = m.iaa;
  r.expertise = {{0.7, 0.6}, {0.7, 0.8}};
  r.probe.accuracy = {{0.5, 0.25}, {0.125, 1.0}};
  r.probe.subspace_average = {0.375, 0.5625};
  r.wall_clock_seconds = 1.5;
  r.config_echo = config_to_text(ExperimentConfig{});
  r.backbone_checksum = 7;
  r.pool_checksum = 9;
  return r;
}

TEST(Report, EmitAndReadBack) {
  testing::TempDir dir("report");
  const RunReport r = sample_report();
  emit_report(r, dir.path() / "out");
  const RunReport back = read_report(dir.path() / "out");
  EXPECT_EQ(back.mode, r.mode);
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_EQ(back.acc, r.acc);
  EXPECT_EQ(back.acc_macro, r.acc_macro);
  EXPECT_EQ(back.step_accuracy, r.step_accuracy);
  EXPECT_EQ(back.step_accuracy_macro, r.step_accuracy_macro);
  EXPECT_EQ(back.laa, r.laa);
  EXPECT_EQ(back.iaa, r.iaa);
  EXPECT_EQ(back.expertise, r.expertise);
  EXPECT_EQ(back.probe.accuracy, r.probe.accuracy);
  EXPECT_EQ(back.probe.subspace_average, r.probe.subspace_average);
  EXPECT_EQ(back.backbone_checksum, r.backbone_checksum);
  EXPECT_EQ(back.pool_checksum, r.pool_checksum);

  const std::string metrics = testing::read_file(dir.path() / "out" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("name,value\n", 0), 0u);
  EXPECT_NE(metrics.find("LAA,0.75\n"), std::string::npos);
  EXPECT_NE(metrics.find("IAA,0.825\n"), std::string::npos);
  const std::string matrix = testing::read_file(dir.path() / "out" / "matrix.csv");
  EXPECT_EQ(matrix.rfind("after_task,eval_task,accuracy,accuracy_macro\n", 0), 0u);
  EXPECT_NE(describe_report(back).find("LAA 0.75"), std::string::npos);
}

TEST(Report, OptionalTablesAreOmitted) {
  testing::TempDir dir("report");
  RunReport r = sample_report();
  r.expertise.clear();
  r.probe = {};
  emit_report(r, dir.path());
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "expertise.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "probe.csv"));
  EXPECT_TRUE(read_report(dir.path()).expertise.empty());
}

TEST(Report, CorruptFilesAreRejected) {
  testing::TempDir dir("report");
  emit_report(sample_report(), dir.path());
  std::ofstream(dir.path() / "metrics.csv") << "wrong,header\n";
  EXPECT_THROW(read_report(dir.path()), Error);
}

TEST(AtomicDirectory, CommitsOnSuccessOnly) {
  testing::TempDir dir("atomic");
  const auto target = dir.path() / "run";
  write_directory_atomically(target, [](const std::filesystem::path& p) { std::ofstream(p / "a") << "1"; });
  EXPECT_EQ(testing::read_file(target / "a"), "1");

  EXPECT_THROW(write_directory_atomically(target,
                                          [](const std::filesystem::path& p) {
                                            std::ofstream(p / "b") << "2";
                                            throw Error("boom");
                                          }),
               Error);
  EXPECT_TRUE(std::filesystem::exists(target / "a"));
  EXPECT_FALSE(std::filesystem::exists(target / "b"));
  std::size_t entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++entries;
  }
  EXPECT_EQ(entries, 1u);

  const auto fresh = dir.path() / "never";
  EXPECT_THROW(write_directory_atomically(fresh, [](const std::filesystem::path&) { throw Error("x"); }), Error);
  EXPECT_FALSE(std::filesystem::exists(fresh));
}

}  // namespace
}  // namespace secl
