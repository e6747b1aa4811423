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
#include "boxmix/mixing.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "boxmix/geometry.hpp"
#include "oracles/brute_force.hpp"

namespace boxmix {
namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
};

Moments beta_moments(double alpha, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (double& x : xs) x = sample_lambda(alpha, rng).lambda;
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = (x - m.mean) * (x - m.mean);
    m2 += d;
    m4 += d * d;
  }
  m.var = m2 / (n - 1);
  m4 /= n;
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt((m4 - m.var * m.var) / n);
  return m;
}

class BetaMomentsTest : public ::testing::TestWithParam<double> {};

TEST_P(BetaMomentsTest, MeanAndVarianceWithinThreeStandardErrors) {
  const double alpha = GetParam();
  const Moments m = beta_moments(alpha, 100000, 31);
  EXPECT_LE(std::abs(m.mean - 0.5), 3 * m.se_mean);
  const double want = 1.0 / (4.0 * (2.0 * alpha + 1.0));
  EXPECT_LE(std::abs(m.var - want), 3 * m.se_var) << "var " << m.var << " want " << want;
}

INSTANTIATE_TEST_SUITE_P(Alphas, BetaMomentsTest, ::testing::Values(0.2, 0.75, 1.5));

TEST(SampleLambdaTest, SmallAlphaConcentratesAtTheEnds) {
  Rng rng = make_rng(32);
  int middle = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double l = sample_lambda(0.2, rng).lambda;
    ASSERT_GE(l, 0.0);
    ASSERT_LE(l, 1.0);
    middle += (l >= 0.1 && l <= 0.9) ? 1 : 0;
  }
  EXPECT_LT(middle, n - middle);
}

TEST(SampleLambdaTest, DeterministicAndValidated) {
  Rng a = make_rng(33), b = make_rng(33);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sample_lambda(0.75, a).lambda, sample_lambda(0.75, b).lambda);
  Rng rng = make_rng(34);
  EXPECT_THROW(sample_lambda(0.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_lambda(-1.0, rng), std::invalid_argument);
}

TEST(MixImagesTest, EndpointsAndMidpoint) {
  const ImageTensor x(4, 5, 3, 0.2), x2(4, 5, 3, 0.6);
  EXPECT_EQ(mix_images(x, x2, {1.0, 1.0}), x);
  EXPECT_EQ(mix_images(x, x2, {0.0, 1.0}), x2);
  const ImageTensor mid = mix_images(x, x2, {0.25, 1.0});
  for (double v : mid.data()) EXPECT_NEAR(v, 0.5, 1e-15);
  EXPECT_THROW(mix_images(x, ImageTensor(4, 4, 3), {0.5, 1.0}), std::invalid_argument);
}

TEST(MixImagesTest, StaysInUnitRange) {
  Rng rng = make_rng(35);
  ImageTensor x(8, 8, 3), x2(8, 8, 3);
  for (double& v : x.data()) v = uniform01(rng);
  for (double& v : x2.data()) v = uniform01(rng);
  for (int i = 0; i < 100; ++i) {
    for (double v : mix_images(x, x2, {uniform01(rng), 1.0}).data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

class BoxMixTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng = make_rng(36);
    t_ = match(oracle::random_ground_truth(rng, 5, 3), anchors_, 0.5, 3);
    t2_ = match(oracle::random_ground_truth(rng, 5, 3), anchors_, 0.5, 3);
  }
  AnchorSet anchors_ = build_anchor_set(toy_anchor_spec());
  AnchorTargets t_, t2_;
};

TEST_F(BoxMixTest, LambdaOneIsIdentity) { EXPECT_EQ(box_mix(t_, t2_, {1.0, 0.2}), t_); }

TEST_F(BoxMixTest, LambdaZeroIsSecond) { EXPECT_EQ(box_mix(t_, t2_, {0.0, 0.2}), t2_); }

TEST(BoxMixSingle, DominantOffsetAndMixedLabel) {
  AnchorTargets t(1, 3), t2(1, 3);
  t.set_one_hot(0, 3);
  t.offset(0) = Offset{0.1, 0.2, 0.3, 0.4};
  const AnchorTargets m = box_mix(t, t2, {0.7, 0.2});
  ASSERT_TRUE(m.offset(0).has_value());
  EXPECT_EQ(*m.offset(0), (Offset{0.1, 0.2, 0.3, 0.4}));
  EXPECT_NEAR(m.label(0)[0], 0.3, 1e-15);
  EXPECT_NEAR(m.label(0)[3], 0.7, 1e-15);

  // Exactly one half takes the second image's (undefined) offset while the
  // label still carries object mass.
  const AnchorTargets h = box_mix(t, t2, {0.5, 0.2});
  EXPECT_FALSE(h.offset(0).has_value());
  EXPECT_EQ(h.label(0)[0], 0.5);
  EXPECT_EQ(h.label(0)[3], 0.5);
}

TEST_F(BoxMixTest, LabelsStayNormalized) {
  Rng rng = make_rng(37);
  for (int i = 0; i < 50; ++i) {
    const AnchorTargets m = box_mix(t_, t2_, {uniform01(rng), 0.2});
    for (std::size_t a = 0; a < m.size(); ++a) {
      double s = 0.0;
      for (double p : m.label(a)) s += p;
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST_F(BoxMixTest, SwappingArgumentsMirrorsLambda) {
  Rng rng = make_rng(38);
  for (int i = 0; i < 50; ++i) {
    double l = uniform01(rng);
    if (l == 0.5) continue;
    const AnchorTargets a = box_mix(t_, t2_, {l, 0.2});
    const AnchorTargets b = box_mix(t2_, t_, {1.0 - l, 0.2});
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_EQ(a.offset(k), b.offset(k));
      for (std::size_t c = 0; c < 4; ++c) ASSERT_NEAR(a.label(k)[c], b.label(k)[c], 1e-15);
    }
  }
}

TEST(BoxMixErrors, AnchorCountMismatch) {
  EXPECT_THROW(box_mix(AnchorTargets(3, 2), AnchorTargets(4, 2), {0.5, 1.0}), std::invalid_argument);
}

TEST(BoxStackTest, Concatenates) {
  const GroundTruth a = {{Box{0.2, 0.2, 0.1, 0.1}, 1}, {Box{0.4, 0.4, 0.2, 0.2}, 2}};
  const GroundTruth b = {{Box{0.6, 0.6, 0.1, 0.1}, 3}, {Box{0.7, 0.3, 0.2, 0.1}, 1}, {Box{0.5, 0.5, 0.5, 0.5}, 2}};
  EXPECT_EQ(box_stack({}, b), b);
  const GroundTruth s = box_stack(a, b);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0], a[0]);
  EXPECT_EQ(s[1], a[1]);
  EXPECT_EQ(s[2], b[0]);
  EXPECT_EQ(s[4], b[2]);
}

TEST(BoxStackTest, MatchingTheStackAgreesWithBruteForce) {
  const AnchorSet anchors = build_anchor_set(toy_anchor_spec());
  Rng rng = make_rng(39);
  for (int i = 0; i < 50; ++i) {
    const GroundTruth s = box_stack(oracle::random_ground_truth(rng, 4, 3), oracle::random_ground_truth(rng, 4, 3));
    EXPECT_EQ(match_with_assignment(s, anchors, 0.5, 3).assigned_gt, oracle::match_assignment(s, anchors.boxes(), 0.5));
  }
}

}  // namespace
}  // namespace boxmix
