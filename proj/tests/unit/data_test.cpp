#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "secl/data.hpp"
#include "secl/error.hpp"
#include "secl/idx.hpp"
#include "test_util.hpp"

namespace secl {
namespace {

// Source dataset with `classes` classes and `per_class` samples each; the
// single input feature encodes (class, index) so samples can be traced.
LabeledDataset toy_source(int classes, int per_class) {
  LabeledDataset d;
  d.num_classes = classes;
  d.inputs = Matrix(static_cast<std::size_t>(classes * per_class), 1);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      d.inputs(static_cast<std::size_t>(c * per_class + i), 0) = c * 1000 + i;
      d.labels.push_back(c);
    }
  return d;
}

TEST(TaskSizes, EvenAndUnevenLayouts) {
  StreamLayout l;
  l.tasks = 5;
  EXPECT_EQ(task_sizes(10, l), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  l.tasks = 10;
  l.first_task_classes = 16;
  std::vector<std::size_t> expect{16};
  expect.insert(expect.end(), 9, 20);
  EXPECT_EQ(task_sizes(196, l), expect);
}

TEST(TaskSizes, TooFewClasses) {
  StreamLayout l;
  l.tasks = 11;
  try {
    task_sizes(10, l);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("too few classes"), std::string::npos);
  }
  l.tasks = 3;
  EXPECT_THROW(task_sizes(10, l), Error);
}

TEST(BuildTaskStream, DisjointReproducibleTasks) {
  const auto train = toy_source(10, 6), test = toy_source(10, 2);
  StreamLayout l;
  l.tasks = 5;
  l.shuffle_seed = 1993;
  const TaskStream s = build_task_stream(train, test, l);
  const TaskStream again = build_task_stream(train, test, l);
  ASSERT_EQ(s.num_tasks(), 5u);
  std::set<int> sources;
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(s.tasks[t].classes.size(), 2);
    EXPECT_EQ(s.tasks[t].train.size(), 12u);
    EXPECT_EQ(s.tasks[t].test.size(), 4u);
    EXPECT_EQ(s.tasks[t].train.inputs, again.tasks[t].train.inputs);
    for (int c = s.tasks[t].classes.begin; c < s.tasks[t].classes.end; ++c) {
      EXPECT_EQ(s.class_task[static_cast<std::size_t>(c)], static_cast<int>(t));
      sources.insert(s.class_source[static_cast<std::size_t>(c)]);
    }
    // Each sample is traced back to its source class through the encoding.
    for (std::size_t i = 0; i < s.tasks[t].train.size(); ++i) {
      const int global = s.tasks[t].train.labels[i];
      const int src = static_cast<int>(s.tasks[t].train.inputs(i, 0)) / 1000;
      EXPECT_EQ(s.class_source[static_cast<std::size_t>(global)], src);
    }
  }
  EXPECT_EQ(sources.size(), 10u);
  s.validate();
}

TEST(BuildTaskStream, SeedChangesClassOrder) {
  const auto train = toy_source(10, 3), test = toy_source(10, 1);
  StreamLayout a, b;
  a.tasks = b.tasks = 5;
  a.shuffle_seed = 1993;
  b.shuffle_seed = 1994;
  EXPECT_NE(build_task_stream(train, test, a).class_source, build_task_stream(train, test, b).class_source);
}

TEST(BuildTaskStream, SingleTaskKeepsEverything) {
  const auto train = toy_source(4, 3), test = toy_source(4, 2);
  StreamLayout l;
  l.tasks = 1;
  const TaskStream s = build_task_stream(train, test, l);
  ASSERT_EQ(s.num_tasks(), 1u);
  EXPECT_EQ(s.tasks[0].train.size(), train.size());
  EXPECT_EQ(s.tasks[0].test.size(), test.size());
}

TEST(BuildTaskStream, PretrainSplitNeverTouchesTestData) {
  const auto train = toy_source(12, 10), test = toy_source(12, 3);
  StreamLayout l;
  l.tasks = 5;
  l.pretrain_holdout_classes = 2;
  l.pretrain_sample_fraction = 0.2;
  const TaskStream s = build_task_stream(train, test, l);
  ASSERT_TRUE(s.pretrain.has_value());
  std::set<double> stream_samples;
  for (const auto& t : s.tasks) {
    for (std::size_t i = 0; i < t.train.size(); ++i) stream_samples.insert(t.train.inputs(i, 0));
    EXPECT_EQ(t.test.size(), 2u * 3u);  // test sets are complete
  }
  for (std::size_t i = 0; i < s.pretrain->size(); ++i) {
    EXPECT_FALSE(stream_samples.contains(s.pretrain->inputs(i, 0)));
  }
  // Two held-out classes in full plus 2 of 10 samples from each stream class.
  EXPECT_EQ(s.pretrain->size(), 2u * 10u + 10u * 2u);
}

TEST(Synthetic, MeansFollowTheBlockGrid) {
  SyntheticSpec spec;
  spec.tasks = 10;
  spec.classes_per_task = 10;
  spec.input_dim = 48;
  spec.block_dims = 4;
  for (std::size_t t = 0; t < spec.tasks; ++t)
    for (std::size_t c = 0; c < spec.classes_per_task; ++c) {
      const auto m = synthetic_class_mean(spec, t, c);
      for (std::size_t j = 0; j < spec.input_dim; ++j) {
        const bool in_block = j >= t * 4 && j < t * 4 + 4;
        const double expect = in_block ? (((c >> (j - t * 4)) & 1U) ? 1.0 : -1.0) : 0.0;
        EXPECT_EQ(m[j], expect);
      }
    }
}

TEST(Synthetic, ZeroNoiseSamplesSitOnTheirMeans) {
  SyntheticSpec spec;
  spec.tasks = 3;
  spec.classes_per_task = 2;
  spec.input_dim = 12;
  spec.noise = 0.0;
  spec.samples_per_class = 5;
  RngStream rng(1, "syn");
  const TaskStream s = gen_synthetic_stream(spec, rng);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& tr = s.tasks[t].train;
    EXPECT_EQ(tr.size(), 8u);  // 4 train + 1 test per class
    EXPECT_EQ(s.tasks[t].test.size(), 2u);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto m = synthetic_class_mean(spec, t, static_cast<std::size_t>(tr.labels[i] - s.tasks[t].classes.begin));
      for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(tr.inputs(i, j), m[j]);
    }
  }
}

TEST(Synthetic, OwnBlockProbeSeparatesAtZeroNoise) {
  // A sign readout on the task's own block is a perfect linear probe.
  SyntheticSpec spec;
  spec.tasks = 4;
  spec.classes_per_task = 2;
  spec.input_dim = 16;
  spec.noise = 0.0;
  RngStream rng(2, "syn");
  const TaskStream s = gen_synthetic_stream(spec, rng);
  for (std::size_t t = 0; t < 4; ++t) {
    const auto& te = s.tasks[t].test;
    for (std::size_t i = 0; i < te.size(); ++i) {
      const int pred = te.inputs(i, t * spec.block_dims) > 0 ? 1 : 0;
      EXPECT_EQ(pred + s.tasks[t].classes.begin, te.labels[i]);
    }
  }
}

TEST(Synthetic, SameRngSameStream) {
  SyntheticSpec spec;
  spec.tasks = 2;
  RngStream a(9, "syn"), b(9, "syn");
  const TaskStream x = gen_synthetic_stream(spec, a), y = gen_synthetic_stream(spec, b);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(x.tasks[t].train.inputs, y.tasks[t].train.inputs);
    EXPECT_EQ(x.tasks[t].test.inputs, y.tasks[t].test.inputs);
  }
}

TEST(Synthetic, Infeasible) {
  SyntheticSpec spec;
  spec.tasks = 20;
  spec.input_dim = 48;
  RngStream r(1, "x");
  EXPECT_THROW(gen_synthetic_stream(spec, r), Error);
  spec.tasks = 2;
  spec.classes_per_task = 17;  // 4 block dims give 16 sign patterns
  EXPECT_THROW(gen_synthetic_stream(spec, r), Error);
}

TEST(Rotate90, WorkedExampleAndGroupLaws) {
  const std::vector<double> img{1, 2, 3, 4};
  EXPECT_EQ(rotate90(img, 2, 1), (std::vector<double>{2, 4, 1, 3}));
  EXPECT_EQ(rotate90(img, 2, 0), img);
  std::vector<double> big(25);
  for (std::size_t i = 0; i < 25; ++i) big[i] = static_cast<double>(i);
  auto four = big;
  for (int i = 0; i < 4; ++i) four = rotate90(four, 5, 1);
  EXPECT_EQ(four, big);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_EQ(rotate90(rotate90(big, 5, a), 5, b), rotate90(big, 5, (a + b) % 4));
}

TEST(Rotate90, NonSquareRejected) {
  const std::vector<double> img(6, 0.0);
  EXPECT_THROW(rotate90(img, 2, 1), Error);
  EXPECT_THROW(rotate_batch(Matrix(2, 6), 2, 1), Error);
}

TEST(StreamGuard, BlocksFutureReadsAndLogsEverything) {
  SyntheticSpec spec;
  spec.tasks = 3;
  spec.classes_per_task = 2;
  spec.input_dim = 12;
  RngStream rng(1, "g");
  const TaskStream s = gen_synthetic_stream(spec, rng);
  StreamGuard g(s);
  g.begin_task(0);
  EXPECT_NO_THROW(g.train(0));
  EXPECT_THROW(g.train(1), Error);
  EXPECT_THROW(g.test(2), Error);
  g.begin_task(1);
  EXPECT_NO_THROW(g.test(1));
  EXPECT_NO_THROW(g.train(0));
  EXPECT_THROW(g.begin_task(0), Error);
  ASSERT_EQ(g.log().size(), 5u);
  EXPECT_EQ(g.log()[1].task, 1u);
  EXPECT_EQ(g.log()[1].learning_task, 0u);
  EXPECT_TRUE(g.log()[2].test_split);
  EXPECT_EQ(g.offline_reads(), 0u);
  (void)g.offline();
  EXPECT_EQ(g.offline_reads(), 1u);
}

// --- IDX ---------------------------------------------------------------

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(b, 4);
}

void write_raw_images(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<unsigned char>& pixels) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_raw_labels(const std::filesystem::path& p, std::uint32_t magic, const std::vector<unsigned char>& ls) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, static_cast<std::uint32_t>(ls.size()));
  out.write(reinterpret_cast<const char*>(ls.data()), static_cast<std::streamsize>(ls.size()));
}

std::string load_error(const std::filesystem::path& img, const std::filesystem::path& lab) {
  try {
    load_idx(img, lab);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Idx, HeaderDimsAndScaling) {
  testing::TempDir dir("idx");
  std::vector<unsigned char> px(10 * 28 * 28, 0);
  px[0] = 255;
  px[1] = 51;
  write_raw_images(dir.path() / "i", 0x803, 10, 28, 28, px);
  write_raw_labels(dir.path() / "l", 0x801, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const LabeledDataset d = load_idx(dir.path() / "i", dir.path() / "l");
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.image_rows, 28u);
  EXPECT_EQ(d.image_cols, 28u);
  EXPECT_EQ(d.num_classes, 10);
  EXPECT_EQ(d.inputs(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.inputs(0, 1), 0.2);
}

TEST(Idx, ContractViolations) {
  testing::TempDir dir("idx-bad");
  const auto img = dir.path() / "i", lab = dir.path() / "l";
  write_raw_labels(lab, 0x801, {0, 1});
  write_raw_images(img, 0x801, 2, 2, 2, std::vector<unsigned char>(8, 0));
  EXPECT_NE(load_error(img, lab).find("bad magic"), std::string::npos);
  write_raw_images(img, 0x803, 2, 2, 2, std::vector<unsigned char>(7, 0));
  EXPECT_NE(load_error(img, lab).find("truncated"), std::string::npos);
  write_raw_images(img, 0x803, 3, 2, 2, std::vector<unsigned char>(12, 0));
  EXPECT_NE(load_error(img, lab).find("count mismatch"), std::string::npos);
  write_raw_images(img, 0x803, 2, 2, 2, std::vector<unsigned char>(8, 0));
  write_raw_labels(lab, 0x803, {0, 1});
  EXPECT_NE(load_error(img, lab).find("bad magic"), std::string::npos);
  EXPECT_THROW(load_idx(dir.path() / "missing", lab), Error);
}

TEST(Idx, WriteReadRoundTrip) {
  testing::TempDir dir("idx-rt");
  LabeledDataset d;
  d.image_rows = d.image_cols = 3;
  d.num_classes = 2;
  d.inputs = Matrix(2, 9);
  for (std::size_t j = 0; j < 9; ++j) {
    d.inputs(0, j) = static_cast<double>(j) / 255.0;
    d.inputs(1, j) = static_cast<double>(255 - j) / 255.0;
  }
  d.labels = {1, 0};
  write_idx(d, dir.path() / "i", dir.path() / "l");
  const LabeledDataset back = load_idx(dir.path() / "i", dir.path() / "l");
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.labels, d.labels);
}

// Cross-check against the summary the fixture generator computed with an
// independent reader.
TEST(Idx, DigitsFixtureMatchesReferenceSummary) {
  std::map<std::string, std::string> ref;
  std::ifstream in(testing::data_dir() / "digits-reference.txt");
  ASSERT_TRUE(in) << "missing fixture";
  std::string key, rest;
  while (in >> key && std::getline(in, rest)) ref[key] = rest.substr(1);
  for (const std::string split : {"train", "test"}) {
    const auto d = load_idx(testing::data_dir() / ("digits-" + split + "-images-idx3-ubyte"),
                            testing::data_dir() / ("digits-" + split + "-labels-idx1-ubyte"));
    EXPECT_EQ(std::to_string(d.size()), ref[split + ".count"]);
    EXPECT_EQ(std::to_string(d.image_rows), ref[split + ".rows"]);
    EXPECT_EQ(std::to_string(d.image_cols), ref[split + ".cols"]);
    EXPECT_EQ(std::to_string(d.labels.front()), ref[split + ".first_label"]);
    long long sum = 0;
    for (double v : d.inputs.values()) sum += std::llround(v * 255.0);
    EXPECT_EQ(std::to_string(sum), ref[split + ".pixel_sum"]);
    std::vector<int> counts(10, 0);
    for (int y : d.labels) ++counts[static_cast<std::size_t>(y)];
    std::string hist;
    for (int c : counts) hist += (hist.empty() ? "" : " ") + std::to_string(c);
    EXPECT_EQ(hist, ref[split + ".class_counts"]);
  }
}

}  // namespace
}  // namespace secl
