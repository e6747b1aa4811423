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
#include "boxmix/detector.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <gtest/gtest.h>

#include "boxmix/error.hpp"
#include "boxmix/rng.hpp"
#include "oracles/gradient_check.hpp"

namespace boxmix {
namespace {

namespace fs = std::filesystem;

ImageTensor random_image(int size, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ImageTensor img(size, size, 3);
  for (double& v : img.data()) v = uniform01(rng);
  return img;
}

TEST(DetectorSpecTest, ToyShapesMatchAnchors) {
  const DetectorSpec spec = DetectorSpec::toy();
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.feature_sizes(), (std::vector<int>{8, 4, 2}));
  EXPECT_EQ(DetectorSpec::parse(spec.to_string()).to_string(), spec.to_string());
  EXPECT_EQ(DetectorSpec::parse(spec.to_string()).digest(), spec.digest());
  DetectorSpec bad = spec;
  bad.anchors.levels[0].rows = 7;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ForwardTest, ZeroParamsGiveZeroOutputs) {
  const DetectorSpec spec = DetectorSpec::toy();
  const ForwardResult r = forward(spec, zero_params(spec), random_image(64, 1));
  EXPECT_EQ(r.preds.size(), 168u);
  for (double v : r.preds.all_logits()) EXPECT_EQ(v, 0.0);
  for (double v : r.preds.all_offsets()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardTest, DeterministicAndAnchorAligned) {
  const DetectorSpec spec = DetectorSpec::toy();
  const ToyDetectorParams params = init_params(spec, 2);
  const ImageTensor img = random_image(64, 3);
  const ForwardResult a = forward(spec, params, img);
  const ForwardResult b = forward(spec, params, img);
  EXPECT_EQ(a.preds, b.preds);
  EXPECT_EQ(a.preds.size(), build_anchor_set(spec.anchors).size());
  EXPECT_EQ(a.preds.num_classes(), 3);
}

TEST(ForwardTest, RejectsWrongShape) {
  const DetectorSpec spec = DetectorSpec::toy();
  EXPECT_THROW(forward(spec, zero_params(spec), random_image(32, 4)), std::invalid_argument);
}

TEST(BackwardTest, ZeroOutputGradientGivesZeroGradient) {
  const DetectorSpec spec = DetectorSpec::toy();
  const ToyDetectorParams params = init_params(spec, 5);
  const ForwardResult r = forward(spec, params, random_image(64, 6));
  const GradientSet g = backward(spec, params, r.cache, PredictionField(r.preds.size(), 3));
  EXPECT_EQ(g, params.zeros_like());
}

TEST(BackwardTest, StaleCacheRejected) {
  const DetectorSpec spec = DetectorSpec::tiny();
  ToyDetectorParams params = init_params(spec, 7);
  const ForwardResult r = forward(spec, params, random_image(8, 8));
  AdamState st = make_adam_state(params);
  adam_step(params, params.zeros_like(), st, AdamHyper{});
  EXPECT_THROW(backward(spec, params, r.cache, r.preds), std::invalid_argument);
}

TEST(GradientCheckTest, EveryLayerMatchesFiniteDifferences) {
  const oracle::GradientFixture f = oracle::make_gradient_fixture(9, false);
  const oracle::GradientCheckReport rep = oracle::check_detection_gradients(f, {}, 1e-5);
  ASSERT_EQ(rep.tensors.size(), f.params.layers.size() * 2);
  for (const auto& t : rep.tensors) {
    EXPECT_GT(t.checked, 0u) << t.name;
    EXPECT_LT(t.max_rel_error, 1e-4) << t.name;
  }
}

TEST(GradientCheckTest, MixedTargetsMatchFiniteDifferences) {
  const oracle::GradientFixture f = oracle::make_gradient_fixture(10, true);
  EXPECT_LT(oracle::check_detection_gradients(f, {}, 1e-5).max_rel_error, 1e-4);
}

TEST(GradientCheckTest, MaskedLevelHeadGetsExactlyZero) {
  const oracle::GradientFixture f = oracle::make_gradient_fixture(11, false);
  const AnchorSet anchors = build_anchor_set(f.spec.anchors);
  std::vector<bool> subset(anchors.size(), true);
  const auto& last = anchors.levels().back();
  for (std::size_t a = last.begin; a < last.end(); ++a) subset[a] = false;
  const ForwardResult r = forward(f.spec, f.params, f.image);
  const DetectionLoss l = detection_loss_with_grad(f.targets, r.preds, kDefaultMiningRatio, subset);
  const GradientSet g = backward(f.spec, f.params, r.cache, l.grad);
  const Conv2d& head = g.head(anchors.levels().size() - 1);
  for (double v : head.weight.data) EXPECT_EQ(v, 0.0);
  for (double v : head.bias.data) EXPECT_EQ(v, 0.0);
  EXPECT_LT(oracle::check_detection_gradients(f, subset, 1e-5).max_rel_error, 1e-4);
}

TEST(InitTest, SeededAndFanInScaled) {
  const DetectorSpec spec = DetectorSpec::toy();
  const ToyDetectorParams a = init_params(spec, 12);
  EXPECT_EQ(a, init_params(spec, 12));
  EXPECT_NE(a, init_params(spec, 13));
  for (const Conv2d& l : a.layers) {
    const double n = static_cast<double>(l.weight.numel());
    double s = 0.0, s2 = 0.0;
    for (double w : l.weight.data) {
      s += w;
      s2 += w * w;
    }
    const double sd = std::sqrt((s2 - s * s / n) / (n - 1));
    const double want = std::sqrt(2.0 / (l.in_channels() * l.kernel() * l.kernel()));
    EXPECT_NEAR(sd / want, 1.0, 0.1);
    for (double b : l.bias.data) EXPECT_EQ(b, 0.0);
  }
}

// Ten scalars held in a single 1x1 convolution: five weights, five biases.
ToyDetectorParams ten_scalars() {
  ToyDetectorParams p;
  Conv2d c;
  c.weight = Tensor({5, 1, 1, 1});
  c.bias = Tensor({5});
  p.layers.push_back(c);
  return p;
}

TEST(AdamTest, ZeroGradientNoDecayLeavesParams) {
  ToyDetectorParams p = ten_scalars();
  for (std::size_t i = 0; i < 5; ++i) p.layers[0].weight.data[i] = 0.3 * static_cast<double>(i) - 0.5;
  const ToyDetectorParams before = p;
  AdamState st = make_adam_state(p);
  AdamHyper h;
  h.weight_decay = 0.0;
  for (int i = 0; i < 5; ++i) adam_step(p, p.zeros_like(), st, h);
  EXPECT_EQ(p, before);
}

TEST(AdamTest, DescendsOnPositiveGradient) {
  ToyDetectorParams p = ten_scalars();
  p.layers[0].weight.data[0] = 1.0;
  GradientSet g = p.zeros_like();
  g.layers[0].weight.data[0] = 1.0;
  AdamState st = make_adam_state(p);
  AdamHyper h;
  h.lr = 0.1;
  adam_step(p, g, st, h);
  EXPECT_LT(p.layers[0].weight.data[0], 1.0);
}

TEST(AdamTest, MatchesReferenceOverHundredSteps) {
  ToyDetectorParams p = ten_scalars();
  Rng rng = make_rng(14);
  std::vector<double> w(10), m(10, 0.0), v(10, 0.0);
  for (std::size_t i = 0; i < 10; ++i) w[i] = uniform(rng, -1, 1);
  std::copy(w.begin(), w.begin() + 5, p.layers[0].weight.data.begin());
  std::copy(w.begin() + 5, w.end(), p.layers[0].bias.data.begin());
  AdamState st = make_adam_state(p);
  const AdamHyper h{1e-2, 0.9, 0.999, 1e-8, 5e-4};
  double b1t = 1.0, b2t = 1.0;
  for (int step = 0; step < 100; ++step) {
    // Gradient of sum_i (i + 1) * w_i^2 / 2 plus a seeded perturbation.
    std::vector<double> g(10);
    for (std::size_t i = 0; i < 10; ++i) g[i] = static_cast<double>(i + 1) * w[i] + uniform(rng, -0.1, 0.1);
    GradientSet gs = p.zeros_like();
    std::copy(g.begin(), g.begin() + 5, gs.layers[0].weight.data.begin());
    std::copy(g.begin() + 5, g.end(), gs.layers[0].bias.data.begin());
    adam_step(p, gs, st, h);

    b1t *= h.beta1;
    b2t *= h.beta2;
    for (std::size_t i = 0; i < 10; ++i) {
      m[i] = h.beta1 * m[i] + (1 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1 - h.beta2) * g[i] * g[i];
      const double step_dir = (m[i] / (1 - b1t)) / (std::sqrt(v[i] / (1 - b2t)) + h.eps);
      w[i] = w[i] - h.lr * step_dir - h.lr * h.weight_decay * w[i];
    }
    for (std::size_t i = 0; i < 5; ++i) {
      ASSERT_NEAR(p.layers[0].weight.data[i], w[i], 1e-10) << "step " << step;
      ASSERT_NEAR(p.layers[0].bias.data[i], w[i + 5], 1e-10) << "step " << step;
    }
  }
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("boxmix_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(CheckpointTest, BitExactRoundTrip) {
  const DetectorSpec spec = DetectorSpec::toy();
  const ToyDetectorParams params = init_params(spec, 15);
  save_checkpoint(dir_ / "m.ckpt", spec, params, "seed=15");
  const Checkpoint ck = load_checkpoint(dir_ / "m.ckpt");
  EXPECT_EQ(ck.params, params);
  EXPECT_EQ(ck.spec.to_string(), spec.to_string());
  EXPECT_EQ(ck.meta, "seed=15");
  save_checkpoint(dir_ / "n.ckpt", ck.spec, ck.params, ck.meta);
  std::ifstream a(dir_ / "m.ckpt", std::ios::binary), b(dir_ / "n.ckpt", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_F(CheckpointTest, DamagedFilesRaiseIoError) {
  const DetectorSpec spec = DetectorSpec::tiny();
  save_checkpoint(dir_ / "m.ckpt", spec, init_params(spec, 16));
  std::string bytes;
  {
    std::ifstream in(dir_ / "m.ckpt", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << data;
    return dir_ / name;
  };
  std::string flipped = bytes;
  flipped[bytes.size() / 2] = static_cast<char>(flipped[bytes.size() / 2] ^ 0x20);
  EXPECT_THROW(load_checkpoint(write("flip.ckpt", flipped)), IoError);
  EXPECT_THROW(load_checkpoint(write("short.ckpt", bytes.substr(0, bytes.size() - 9))), IoError);
  EXPECT_THROW(load_checkpoint(write("empty.ckpt", "")), IoError);
  EXPECT_THROW(load_checkpoint(dir_ / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace boxmix
