// Copyright 2026 The BoxMix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "boxmix/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

namespace boxmix {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = parse_and_dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// One small dataset and one trained checkpoint shared by the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "boxmix_cli_test";
    fs::remove_all(root_);
    ASSERT_EQ(run({"gen-data", "--out", (root_ / "data").string(), "--train", "8", "--test", "6", "--seed", "3"}).code,
              0);
    const CliRun r = run({"train", "--data", (root_ / "data").string(), "--out", (root_ / "run").string(), "--mode",
                       "mixup", "--epochs", "1", "--batch-size", "4", "--threads", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }
  static fs::path root_;
  std::string data() const { return (root_ / "data").string(); }
  std::string ckpt() const { return (root_ / "run" / "model.ckpt").string(); }
};
fs::path CliTest::root_;

TEST(CliUsageTest, ExitCodes) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"gen-data"}).code, 2);  // --out is required
  EXPECT_EQ(run({"train", "--mode", "cutmix", "--data", "x"}).code, 3);
  EXPECT_EQ(run({"train", "--lr", "-1", "--data", "x"}).code, 3);
  EXPECT_EQ(run({"train", "--set", "nonsense"}).code, 3);
  EXPECT_EQ(run({"train"}).code, 3);  // no data directory
  EXPECT_EQ(run({"train", "--config", "/nonexistent/boxmix.cfg", "--data", "x"}).code, 4);
  EXPECT_EQ(run({"train", "--data", "/nonexistent/boxmix_data"}).code, 4);
}

TEST(CliUsageTest, SelfCheckPasses) {
  const CliRun r = run({"selfcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(CliUsageTest, PlotBetaHistogram) {
  const CliRun r = run({"plot-beta", "--alpha", "0.2", "--n", "20000", "--seed", "1"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# schema=", 0), 0u);
  EXPECT_NE(r.out.find("bin_lo,bin_hi,count"), std::string::npos);
  EXPECT_EQ(r.out, run({"plot-beta", "--alpha", "0.2", "--n", "20000", "--seed", "1"}).out);

  const auto u = beta_histogram(0.2, 20000, 1);
  ASSERT_EQ(u.size(), 50u);
  EXPECT_EQ(std::accumulate(u.begin(), u.end(), std::uint64_t{0}), 20000u);
  EXPECT_GT(u.front(), 10 * u[25]);
  EXPECT_GT(u.back(), 10 * u[25]);
  const auto m = beta_histogram(1.5, 20000, 1);
  EXPECT_LT(m.front(), m[25]);
  EXPECT_LT(m.back(), m[25]);
  EXPECT_THROW(beta_histogram(0.0, 10, 1), std::invalid_argument);
  EXPECT_EQ(run({"plot-beta", "--alpha", "-1"}).code, 3);
}

TEST_F(CliTest, GenDataIsByteIdentical) {
  const fs::path other = root_ / "data2";
  ASSERT_EQ(run({"gen-data", "--out", other.string(), "--train", "8", "--test", "6", "--seed", "3"}).code, 0);
  for (const auto& split : {"train", "test"}) {
    EXPECT_EQ(slurp(root_ / "data" / split / "manifest.txt"), slurp(other / split / "manifest.txt"));
    for (const auto& e : fs::directory_iterator(other / split / "images"))
      EXPECT_EQ(slurp(e.path()), slurp(root_ / "data" / split / "images" / e.path().filename())) << e.path();
  }
  ASSERT_EQ(run({"gen-data", "--out", other.string(), "--train", "8", "--test", "6", "--seed", "4"}).code, 0);
  EXPECT_NE(slurp(root_ / "data" / "train" / "manifest.txt"), slurp(other / "train" / "manifest.txt"));
}

TEST_F(CliTest, TrainWritesRunDirectoryWithModeDefaults) {
  const std::string cfg = slurp(root_ / "run" / "config.txt");
  EXPECT_NE(cfg.find("mode = mixup"), std::string::npos) << cfg;
  EXPECT_NE(cfg.find("alpha = 0.2\n"), std::string::npos) << cfg;
  EXPECT_TRUE(fs::exists(root_ / "run" / "losses.csv"));
  EXPECT_TRUE(fs::exists(root_ / "run" / "checkpoints" / "epoch_001.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "run" / "report.json"));
}

TEST_F(CliTest, EvalRerunIsByteIdentical) {
  const fs::path a = root_ / "eval_a", b = root_ / "eval_b";
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt(), "--data", data(), "--out", a.string(), "--threads", "1"}).code, 0);
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt(), "--data", data(), "--out", b.string(), "--threads", "3"}).code, 0);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_NE(slurp(a / "report.json").find("\"coco\""), std::string::npos);
}

TEST_F(CliTest, StudiesRun) {
  const fs::path o = root_ / "studies";
  CliRun r = run({"eval-noise", "--checkpoint", ckpt(), "--compare", ckpt(), "--data", data(), "--out", o.string(),
               "--sigmas", "0,0.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("difference,0,0"), std::string::npos) << r.out;
  r = run({"eval-patch", "--checkpoint", ckpt(), "--data", data(), "--out", o.string(), "--copies", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(o / "patch.csv"));
  r = run({"analyze-flatten", "--baseline", ckpt(), "--mixup", ckpt(), "--data", data(), "--out", o.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(o / "flattening.csv"));
}

TEST_F(CliTest, CorruptedCheckpointIsAnIoError) {
  const fs::path bad = root_ / "bad.ckpt";
  std::string bytes = slurp(ckpt());
  bytes[bytes.size() / 2] ^= 0x01;
  std::ofstream(bad, std::ios::binary) << bytes;
  EXPECT_EQ(run({"eval", "--checkpoint", bad.string(), "--data", data(), "--out", (root_ / "x").string()}).code, 4);
  EXPECT_EQ(run({"eval", "--checkpoint", (root_ / "missing.ckpt").string(), "--data", data()}).code, 4);
}

}  // namespace
}  // namespace boxmix
