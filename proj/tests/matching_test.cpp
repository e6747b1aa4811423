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
#include "boxmix/matching.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <gtest/gtest.h>

#include "boxmix/mixing.hpp"
#include "oracles/brute_force.hpp"
#include "oracles/selfcheck.hpp"

namespace boxmix {
namespace {

class MatchTest : public ::testing::Test {
 protected:
  AnchorSet anchors_ = build_anchor_set(toy_anchor_spec());
};

TEST_F(MatchTest, EmptyGroundTruthIsAllBackground) {
  const AnchorTargets t = match({}, anchors_, 0.5, 3);
  ASSERT_EQ(t.size(), anchors_.size());
  for (std::size_t a = 0; a < t.size(); ++a) {
    EXPECT_FALSE(t.offset(a).has_value());
    EXPECT_EQ(t.label(a)[kBackground], 1.0);
  }
}

TEST_F(MatchTest, BoxEqualToAnAnchor) {
  const std::size_t j = 150;  // a 4x4-level anchor; no other anchor reaches 0.7
  const GroundTruth y = {{anchors_[j], 2}};
  const MatchResult r = match_with_assignment(y, anchors_, 0.7, 3);
  for (std::size_t a = 0; a < anchors_.size(); ++a) {
    if (a == j) {
      ASSERT_TRUE(r.targets.offset(a).has_value());
      for (double v : *r.targets.offset(a)) EXPECT_EQ(v, 0.0);
      EXPECT_EQ(r.targets.label(a)[2], 1.0);
    } else {
      EXPECT_EQ(r.assigned_gt[a], -1) << "anchor " << a;
    }
  }
}

TEST_F(MatchTest, BestMatchForcedBelowThreshold) {
  // A box far smaller than every anchor still gets exactly its best anchor.
  const GroundTruth y = {{Box{0.52, 0.47, 0.04, 0.04}, 1}};
  const MatchResult r = match_with_assignment(y, anchors_, 0.5, 3);
  const auto n = std::count(r.assigned_gt.begin(), r.assigned_gt.end(), 0);
  EXPECT_EQ(n, 1);
}

TEST_F(MatchTest, SharedBestAnchorGoesToHigherIou) {
  // Both boxes prefer anchor 0 of the 2x2 level; the better fit keeps it and
  // the other falls back to its next-best anchor.
  AnchorGridSpec spec;
  spec.levels.push_back({1, 2, {0.5}, {1.0}});
  const AnchorSet two = build_anchor_set(spec);  // centers (0.25,0.5), (0.75,0.5)
  const GroundTruth y = {{Box{0.27, 0.5, 0.3, 0.3}, 1}, {Box{0.25, 0.5, 0.45, 0.45}, 2}};
  const MatchResult r = match_with_assignment(y, two, 0.9, 2);
  EXPECT_EQ(r.assigned_gt[0], 1);
  EXPECT_EQ(r.assigned_gt[1], 0);
}

TEST_F(MatchTest, ThresholdConflictTakesHighestIou) {
  AnchorGridSpec spec;
  spec.levels.push_back({1, 1, {0.5}, {1.0}});
  const AnchorSet one = build_anchor_set(spec);
  const GroundTruth y = {{Box{0.5, 0.5, 0.45, 0.45}, 1}, {Box{0.5, 0.5, 0.5, 0.48}, 2}};
  const MatchResult r = match_with_assignment(y, one, 0.5, 2);
  EXPECT_EQ(r.assigned_gt[0], 1);
}

TEST_F(MatchTest, EveryBoxMatchedAndOffsetsDecode) {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const GroundTruth y = oracle::random_ground_truth(rng, 20, 3);
    const MatchResult r = match_with_assignment(y, anchors_, 0.5, 3);
    std::vector<int> hits(y.size(), 0);
    for (std::size_t a = 0; a < anchors_.size(); ++a) {
      const int g = r.assigned_gt[a];
      if (g < 0) continue;
      ++hits[static_cast<std::size_t>(g)];
      const Box back = decode_offsets(anchors_[a], r.targets.offset(a));
      const Box& want = y[static_cast<std::size_t>(g)].box;
      ASSERT_NEAR(back.cx, want.cx, 1e-9);
      ASSERT_NEAR(back.cy, want.cy, 1e-9);
      ASSERT_NEAR(back.w, want.w, 1e-9);
      ASSERT_NEAR(back.h, want.h, 1e-9);
    }
    for (int h : hits) ASSERT_GE(h, 1);
  }
}

TEST_F(MatchTest, OffsetDefinedIffObjectLabel) {
  Rng rng = make_rng(22);
  const AnchorTargets t = match(oracle::random_ground_truth(rng, 6, 3), anchors_, 0.5, 3);
  for (std::size_t a = 0; a < t.size(); ++a) EXPECT_EQ(t.offset(a).has_value(), t.label(a)[kBackground] == 0.0);
}

TEST_F(MatchTest, ThreeBoxesAgreeWithBruteForce) {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    GroundTruth y;
    for (int i = 0; i < 3; ++i) y.push_back({oracle::random_box(rng), 1 + i});
    const MatchResult r = match_with_assignment(y, anchors_, 0.5, 3);
    ASSERT_EQ(r.assigned_gt, oracle::match_assignment(y, anchors_.boxes(), 0.5));
  }
}

TEST(MatchEquivalence, RandomInstancesAgreeWithBruteForce) {
  const oracle::Equivalence e = oracle::match_equivalence(24, 200);
  EXPECT_TRUE(e.ok()) << e.first_failure;
}

TEST_F(MatchTest, Deterministic) {
  Rng rng = make_rng(25);
  const GroundTruth y = oracle::random_ground_truth(rng, 10, 3);
  EXPECT_EQ(match(y, anchors_, 0.5, 3), match(y, anchors_, 0.5, 3));
}

TEST_F(MatchTest, RejectsBadArguments) {
  EXPECT_THROW(match({}, anchors_, 0.0, 3), std::invalid_argument);
  EXPECT_THROW(match({}, anchors_, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(match({{Box{0.5, 0.5, 0.2, 0.2}, 0}}, anchors_, 0.5, 3), std::invalid_argument);
  EXPECT_THROW(match({{Box{0.5, 0.5, 0.2, 0.2}, 4}}, anchors_, 0.5, 3), std::invalid_argument);
}

TEST(PositivesMaskTest, Rules) {
  AnchorTargets t(3, 3);
  t.set_one_hot(1, 2);
  auto row = t.label(2);
  row[0] = 0.8;
  row[3] = 0.2;
  EXPECT_EQ(positives_mask(AnchorTargets(4, 3)), std::vector<bool>(4, false));
  EXPECT_EQ(positives_mask(t, 0.05), (std::vector<bool>{false, true, true}));
  EXPECT_EQ(positives_mask(t, 0.25), (std::vector<bool>{false, true, false}));
}

}  // namespace
}  // namespace boxmix
