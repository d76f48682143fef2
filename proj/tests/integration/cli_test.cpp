#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "secl/config.hpp"
#include "small_config.hpp"
#include "test_util.hpp"

namespace secl {
namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "secl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  Outcome o{code, ::testing::internal::GetCapturedStdout(), ::testing::internal::GetCapturedStderr()};
  return o;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = dir_.path() / "small.cfg";
    std::ofstream(config_) << config_to_text(testing::small_config(3));
  }
  testing::TempDir dir_{"cli"};
  std::filesystem::path config_;
};

TEST_F(Cli, MissingConfigIsAUsageError) {
  const Outcome o = invoke({"run"});
  EXPECT_NE(o.code, 0);
  EXPECT_NE(o.err.find("--config"), std::string::npos);
  const Outcome absent = invoke({"run", "-c", (dir_.path() / "nope.cfg").string()});
  EXPECT_NE(absent.code, 0);
  EXPECT_NE(invoke({}).code, 0);
}

TEST_F(Cli, RunThenInspect) {
  const auto out = dir_.path() / "r";
  const Outcome o = invoke({"run", "-c", config_.string(), "-o", out.string(), "--mode", "se"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.rfind("se seed=7 LAA=", 0), 0u);
  for (const char* f : {"metrics.csv", "matrix.csv", "run_meta.txt", "pool.bin", "store.bin"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  const Outcome shown = invoke({"inspect", out.string()});
  EXPECT_EQ(shown.code, 0);
  EXPECT_NE(shown.out.find("mode se, seed 7, 3 tasks"), std::string::npos);
}

TEST_F(Cli, ModesDifferOnlyInEvalFields) {
  const auto a = dir_.path() / "aee", n = dir_.path() / "noe";
  ASSERT_EQ(invoke({"run", "-c", config_.string(), "-o", a.string(), "-m", "aee"}).code, 0);
  ASSERT_EQ(invoke({"run", "-c", config_.string(), "-o", n.string(), "-m", "noe"}).code, 0);
  auto config_lines = [](const std::filesystem::path& dir) {
    std::istringstream in(testing::read_file(dir / "run_meta.txt"));
    std::vector<std::string> lines;
    bool in_config = false;
    for (std::string l; std::getline(in, l);) {
      if (in_config) lines.push_back(l);
      in_config = in_config || l == "[config]";
    }
    return lines;
  };
  const auto la = config_lines(a), ln = config_lines(n);
  ASSERT_EQ(la.size(), ln.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (la[i] != ln[i]) EXPECT_EQ(la[i].rfind("eval.", 0), 0u) << la[i];
  }
}

TEST_F(Cli, OutRootAndSeedOverride) {
  const auto root = dir_.path() / "root";
  ::setenv("SECL_OUT_ROOT", root.c_str(), 1);
  const Outcome o = invoke({"run", "-c", config_.string(), "-s", "11"});
  ::unsetenv("SECL_OUT_ROOT");
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(std::filesystem::exists(root / "aee-seed-11" / "metrics.csv"));
}

TEST_F(Cli, SweepPrintsSummary) {
  const auto out = dir_.path() / "s";
  const Outcome o =
      invoke({"sweep", "-c", config_.string(), "-o", out.string(), "--seeds", "1,2", "--modes", "aee,se"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.rfind("mode,alpha,runs,laa_mean,laa_std,iaa_mean,iaa_std\naee,0,2,", 0), 0u) << o.out;
  EXPECT_NE(o.out.find("\nse,0,2,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out / "summary.csv"));
}

TEST_F(Cli, FailedRunLeavesNoDirectory) {
  std::ofstream(config_, std::ios::app) << "peft.alpha = 0.5\n";  // SSL on a non-image stream
  const auto out = dir_.path() / "bad";
  const Outcome o = invoke({"run", "-c", config_.string(), "-o", out.string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("SSL requires image inputs"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(out));
  for (const auto& e : std::filesystem::directory_iterator(dir_.path()))
    EXPECT_EQ(e.path().filename().string().find("bad"), std::string::npos) << e.path();
}

TEST_F(Cli, BadFlagValuesAreRejected) {
  EXPECT_EQ(invoke({"run", "-c", config_.string(), "--mode", "best"}).code, 1);
  EXPECT_NE(invoke({"run", "-c", config_.string(), "--seed", "x"}).code, 0);
  EXPECT_NE(invoke({"inspect", (dir_.path() / "missing").string()}).code, 0);
}

}  // namespace
}  // namespace secl
