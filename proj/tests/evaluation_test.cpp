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
#include "boxmix/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "boxmix/rng.hpp"
#include "oracles/brute_force.hpp"
#include "oracles/linalg.hpp"
#include "oracles/selfcheck.hpp"

namespace boxmix {
namespace {

Box corners(double x1, double y1, double x2, double y2) { return Box::from_corners(x1, y1, x2, y2); }

AnchorSet single_cell_anchors(int k) {
  AnchorGridSpec spec;
  std::vector<double> sizes;
  for (int i = 0; i < k; ++i) sizes.push_back(0.3 + 0.1 * i);
  spec.levels.push_back({1, 1, sizes, {1.0}});
  return build_anchor_set(spec);
}

TEST(DecodeTest, UniformLogitsBelowThreshold) {
  const AnchorSet anchors = build_anchor_set(toy_anchor_spec());
  const PredictionField p(anchors.size(), 3);
  EXPECT_TRUE(decode_predictions(p, anchors, 0.3).empty());
  EXPECT_EQ(decode_predictions(p, anchors, 0.0).size(), anchors.size() * 3);
}

TEST(DecodeTest, OneStrongLogit) {
  const AnchorSet anchors = single_cell_anchors(2);
  PredictionField p(2, 3);
  p.logits(1)[2] = 10.0;
  p.offsets(1)[0] = 1.0;
  const auto dets = decode_predictions(p, anchors, 0.3);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].class_id, 2);
  EXPECT_NEAR(dets[0].score, std::exp(10.0) / (std::exp(10.0) + 3.0), 1e-15);
  EXPECT_NEAR(dets[0].box.cx, 0.5 + 0.1 * 0.4, 1e-15);
}

TEST(DecodeTest, BoxesClippedToUnitSquare) {
  const AnchorSet anchors = single_cell_anchors(1);
  PredictionField p(1, 2);
  p.logits(0)[1] = 5.0;
  p.offsets(0)[2] = 10.0;  // far wider than the image
  const auto dets = decode_predictions(p, anchors, 0.5);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box.x1(), 0.0);
  EXPECT_EQ(dets[0].box.x2(), 1.0);
}

TEST(NmsTest, SingleAndDuplicate) {
  const Detection a{corners(0.1, 0.1, 0.4, 0.4), 1, 0.9};
  EXPECT_EQ(nms({a}, 0.45, 200), std::vector<Detection>{a});
  Detection b = a;
  b.score = 0.8;
  EXPECT_EQ(nms({b, a}, 0.45, 200), std::vector<Detection>{a});
  Detection c = b;
  c.class_id = 2;
  EXPECT_EQ(nms({a, c}, 0.45, 200), (std::vector<Detection>{a, c}));
  EXPECT_EQ(nms({a, c}, 0.45, 1), std::vector<Detection>{a});
}

TEST(NmsTest, RandomAgreeWithBruteForceAndInvariants) {
  const oracle::Equivalence e = oracle::nms_equivalence(51, 200);
  EXPECT_TRUE(e.ok()) << e.first_failure;
  Rng rng = make_rng(52);
  for (int k = 0; k < 100; ++k) {
    const auto dets = oracle::random_detections(rng, 50, 3, oracle::random_ground_truth(rng, 5, 3));
    const auto kept = nms(dets, 0.45, 200);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ASSERT_NE(std::find(dets.begin(), dets.end(), kept[i]), dets.end());
      if (i > 0) {
        ASSERT_GE(kept[i - 1].score, kept[i].score);
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (kept[j].class_id == kept[i].class_id) {
          ASSERT_LT(iou(kept[j].box, kept[i].box), 0.45);
        }
      }
    }
  }
}

TEST(ApTest, SingleDetection) {
  const std::vector<GroundTruth> gts = {{{corners(0.1, 0.1, 0.5, 0.5), 1}}};
  const VocResult hit = voc_map({{{corners(0.1, 0.1, 0.5, 0.5), 1, 0.7}}}, gts, 1);
  EXPECT_EQ(hit.map, 1.0);
  const VocResult miss = voc_map({{{corners(0.3, 0.3, 0.7, 0.7), 1, 0.7}}}, gts, 1);
  EXPECT_EQ(miss.map, 0.0);
}

TEST(ApTest, ClassWithoutGroundTruthExcluded) {
  const std::vector<GroundTruth> gts = {{{corners(0.1, 0.1, 0.5, 0.5), 1}}};
  const VocResult r = voc_map({{{corners(0.1, 0.1, 0.5, 0.5), 1, 0.7}, {corners(0.6, 0.6, 0.9, 0.9), 2, 0.9}}}, gts, 2);
  ASSERT_EQ(r.per_class_ap.size(), 2u);
  EXPECT_EQ(r.per_class_ap[0], 1.0);
  EXPECT_FALSE(r.per_class_ap[1].has_value());
  EXPECT_EQ(r.map, 1.0);
}

// Two images, two classes, eight detections and five ground truths.
// Class 1 ranks TP TP FP FP TP over 3 objects; class 2 ranks TP FP TP
// over 2 objects.
struct PrFixture {
  std::vector<ImageDetections> dets;
  std::vector<GroundTruth> gts;
  PrFixture() {
    const Box g1 = corners(0.1, 0.1, 0.3, 0.3), g2 = corners(0.5, 0.5, 0.7, 0.7), g3 = corners(0.1, 0.6, 0.3, 0.8);
    const Box g4 = corners(0.2, 0.2, 0.4, 0.4), g5 = corners(0.6, 0.1, 0.8, 0.3);
    gts = {{{g1, 1}, {g2, 1}, {g3, 2}}, {{g4, 1}, {g5, 2}}};
    dets = {{{g1, 1, 0.9},
             {g1, 1, 0.7},
             {corners(0.8, 0.8, 0.9, 0.9), 1, 0.6},
             {g2, 1, 0.5},
             {corners(0.2, 0.6, 0.4, 0.8), 2, 0.4},
             {g3, 2, 0.3}},
            {{g4, 1, 0.8}, {g5, 2, 0.95}}};
  }
};

TEST(ApTest, HandEnumeratedElevenPoint) {
  const PrFixture f;
  const VocResult r = voc_map(f.dets, f.gts, 2, 0.5, ApStyle::kElevenPoint);
  // Class 1: precision 1 up to recall 2/3 (7 levels), then 3/5 (4 levels).
  EXPECT_NEAR(*r.per_class_ap[0], (7.0 + 4 * 0.6) / 11.0, 1e-15);
  // Class 2: precision 1 up to recall 1/2 (6 levels), then 2/3 (5 levels).
  EXPECT_NEAR(*r.per_class_ap[1], (6.0 + 5 * 2.0 / 3.0) / 11.0, 1e-15);
  EXPECT_NEAR(r.map, 56.2 / 66.0, 1e-15);
  const VocResult o = oracle::voc_map(f.dets, f.gts, 2, 0.5, ApStyle::kElevenPoint);
  EXPECT_EQ(r.per_class_ap, o.per_class_ap);
  EXPECT_EQ(r.map, o.map);
}

TEST(ApTest, HandEnumeratedAllPoint) {
  const PrFixture f;
  const VocResult r = voc_map(f.dets, f.gts, 2, 0.5, ApStyle::kAllPoint);
  EXPECT_NEAR(*r.per_class_ap[0], (1.0 + 1.0 + 0.6) / 3.0, 1e-15);
  EXPECT_NEAR(*r.per_class_ap[1], 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.map, 0.85, 1e-15);
  const VocResult o = oracle::voc_map(f.dets, f.gts, 2, 0.5, ApStyle::kAllPoint);
  EXPECT_EQ(r.per_class_ap, o.per_class_ap);
}

TEST(ApTest, PrCurveOracle) {
  const oracle::PrCurve c = oracle::pr_curve({true, true, false, false, true}, 3);
  EXPECT_EQ(c.precision, (std::vector<double>{1.0, 1.0, 2.0 / 3.0, 0.5, 0.6}));
  EXPECT_EQ(c.recall, (std::vector<double>{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0}));
  EXPECT_EQ(average_precision({true, true, false, false, true}, 3, ApStyle::kAllPoint),
            oracle::average_precision({true, true, false, false, true}, 3, ApStyle::kAllPoint));
}

TEST(ApTest, RandomAgreeWithBruteForce) {
  const oracle::Equivalence e = oracle::voc_equivalence(53, 200);
  EXPECT_TRUE(e.ok()) << e.first_failure;
}

TEST(ApTest, InvariantUnderMonotoneScoreMaps) {
  Rng rng = make_rng(54);
  for (int k = 0; k < 50; ++k) {
    std::vector<GroundTruth> gts;
    std::vector<ImageDetections> dets;
    for (int i = 0; i < 3; ++i) {
      gts.push_back(oracle::random_ground_truth(rng, 5, 3));
      dets.push_back(oracle::random_detections(rng, 8, 3, gts.back()));
    }
    auto squashed = dets;
    for (auto& d : squashed)
      for (auto& x : d) x.score = 0.25 * x.score * x.score * x.score + 0.1;
    const VocResult a = voc_map(dets, gts, 3), b = voc_map(squashed, gts, 3);
    ASSERT_EQ(a.per_class_ap, b.per_class_ap);
    const CocoMetrics c = coco_ap(dets, gts, 3), d = coco_ap(squashed, gts, 3);
    ASSERT_EQ(c.ap, d.ap);
    ASSERT_EQ(c.ar100, d.ar100);
  }
}

TEST(CocoTest, PerfectDetections) {
  const std::vector<GroundTruth> gts = {{{corners(0.0, 0.0, 0.04, 0.04), 1}, {corners(0.2, 0.2, 0.3, 0.3), 2}},
                                        {{corners(0.3, 0.3, 0.9, 0.9), 1}}};
  std::vector<ImageDetections> dets(2);
  for (std::size_t i = 0; i < 2; ++i)
    for (const auto& g : gts[i]) dets[i].push_back({g.box, g.class_id, 0.9});
  const CocoMetrics m = coco_ap(dets, gts, 2);
  for (const auto* v : {&m.ap, &m.ap50, &m.ap75, &m.ap_small, &m.ap_medium, &m.ap_large, &m.ar1, &m.ar10, &m.ar100,
                        &m.ar_small, &m.ar_medium, &m.ar_large}) {
    ASSERT_TRUE(v->has_value());
    EXPECT_EQ(**v, 1.0);
  }
}

TEST(CocoTest, EmptyBucketIsNull) {
  const std::vector<GroundTruth> gts = {{{corners(0.3, 0.3, 0.9, 0.9), 1}}};
  const CocoMetrics m = coco_ap({{{corners(0.3, 0.3, 0.9, 0.9), 1, 0.5}}}, gts, 1);
  EXPECT_FALSE(m.ap_small.has_value());
  EXPECT_FALSE(m.ap_medium.has_value());
  EXPECT_EQ(m.ap_large, 1.0);
}

TEST(CocoTest, ThresholdsAndOrdering) {
  const auto t = coco_iou_thresholds();
  ASSERT_EQ(t.size(), 10u);
  EXPECT_EQ(t.front(), 0.5);
  EXPECT_EQ(t[5], 0.75);
  EXPECT_EQ(t.back(), 0.95);
  Rng rng = make_rng(55);
  for (int k = 0; k < 50; ++k) {
    std::vector<GroundTruth> gts;
    std::vector<ImageDetections> dets;
    for (int i = 0; i < 3; ++i) {
      gts.push_back(oracle::random_ground_truth(rng, 5, 2));
      dets.push_back(oracle::random_detections(rng, 8, 2, gts.back()));
    }
    const CocoMetrics m = coco_ap(dets, gts, 2);
    if (m.ap) {
      ASSERT_GE(*m.ap50, *m.ap - 1e-12);
    }
    if (m.ar1) {
      ASSERT_LE(*m.ar1, *m.ar10 + 1e-12);
    }
    if (m.ar10) {
      ASSERT_LE(*m.ar10, *m.ar100 + 1e-12);
    }
  }
}

TEST(CocoTest, ThreeImageFixtureMatchesOracle) {
  const std::vector<GroundTruth> gts = {
      {{corners(0.1, 0.1, 0.14, 0.13), 1}, {corners(0.5, 0.5, 0.62, 0.6), 1}, {corners(0.2, 0.6, 0.7, 0.95), 2}},
      {{corners(0.0, 0.0, 0.3, 0.3), 2}},
      {{corners(0.4, 0.4, 0.45, 0.48), 1}, {corners(0.6, 0.1, 0.9, 0.5), 2}}};
  const std::vector<ImageDetections> dets = {
      {{corners(0.1, 0.1, 0.14, 0.14), 1, 0.9},
       {corners(0.5, 0.52, 0.62, 0.6), 1, 0.8},
       {corners(0.25, 0.6, 0.7, 0.9), 2, 0.7},
       {corners(0.5, 0.5, 0.6, 0.6), 1, 0.3}},
      {{corners(0.02, 0.0, 0.3, 0.28), 2, 0.6}, {corners(0.5, 0.5, 0.9, 0.9), 2, 0.5}},
      {{corners(0.4, 0.41, 0.45, 0.48), 1, 0.8}, {corners(0.62, 0.1, 0.9, 0.45), 2, 0.8}}};
  const CocoMetrics a = coco_ap(dets, gts, 2), b = oracle::coco_ap(dets, gts, 2);
  EXPECT_EQ(a.ap, b.ap);
  EXPECT_EQ(a.ap50, b.ap50);
  EXPECT_EQ(a.ap75, b.ap75);
  EXPECT_EQ(a.ap_small, b.ap_small);
  EXPECT_EQ(a.ap_medium, b.ap_medium);
  EXPECT_EQ(a.ap_large, b.ap_large);
  EXPECT_EQ(a.ar1, b.ar1);
  EXPECT_EQ(a.ar100, b.ar100);
  EXPECT_EQ(a.ar_small, b.ar_small);
  EXPECT_TRUE(a.ap_small.has_value());
}

TEST(CocoTest, RandomAgreeWithBruteForce) {
  const oracle::Equivalence e = oracle::coco_equivalence(56, 100);
  EXPECT_TRUE(e.ok()) << e.first_failure;
}

// Three images with one transplanted patch each.
std::vector<PatchImage> patch_fixture() {
  std::vector<PatchImage> imgs(3);
  imgs[0].patch = {corners(0.1, 0.1, 0.5, 0.5), 2};
  imgs[0].others = {{corners(0.6, 0.6, 0.9, 0.9), 2}, {corners(0.1, 0.6, 0.3, 0.9), 1}};
  imgs[0].dets = {{corners(0.1, 0.1, 0.5, 0.5), 2, 0.9},     // detects the patch
                  {corners(0.6, 0.6, 0.9, 0.9), 2, 0.8},     // best target is another object
                  {corners(0.12, 0.12, 0.5, 0.5), 2, 0.7},   // duplicate on the patch
                  {corners(0.1, 0.1, 0.5, 0.5), 1, 0.6}};    // wrong class
  imgs[1].patch = {corners(0.2, 0.2, 0.6, 0.6), 1};
  imgs[1].others = {{corners(0.5, 0.5, 0.9, 0.9), 1}};
  imgs[1].dets = {{corners(0.3, 0.3, 0.7, 0.7), 1, 0.85},    // closest to the patch, IoU 9/23
                  {corners(0.5, 0.5, 0.9, 0.9), 1, 0.5}};
  imgs[2].patch = {corners(0.6, 0.1, 0.9, 0.4), 3};
  imgs[2].dets = {{corners(0.65, 0.1, 0.9, 0.35), 3, 0.4}};  // IoU 0.0625 / 0.09
  return imgs;
}

TEST(PatchMetricsTest, HandEnumeratedAtHalf) {
  const PatchMetrics m = patch_metrics(patch_fixture(), 3, 0.5);
  EXPECT_EQ(m.patches, 3);
  EXPECT_EQ(m.patches_detected, 2);
  EXPECT_EQ(m.candidate_detections, 4);
  EXPECT_EQ(m.true_positive_detections, 2);
  EXPECT_TRUE(m.precision_defined);
  EXPECT_EQ(m.precision, 0.5);
  EXPECT_EQ(m.recall, 2.0 / 3.0);
  // Class 1 ranks FP FP TP over 3 objects; classes 2 and 3 are perfect.
  EXPECT_DOUBLE_EQ(m.map, (4.0 / 3.0 / 11.0 + 1.0 + 1.0) / 3.0);
  EXPECT_EQ(m.invisible_patches, 0);
}

TEST(PatchMetricsTest, HandEnumeratedAtThreeQuarters) {
  const PatchMetrics m = patch_metrics(patch_fixture(), 3, 0.75);
  EXPECT_EQ(m.patches_detected, 1);
  EXPECT_EQ(m.candidate_detections, 4);
  EXPECT_EQ(m.true_positive_detections, 1);
  EXPECT_EQ(m.precision, 0.25);
  EXPECT_EQ(m.recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.map, (4.0 / 3.0 / 11.0 + 1.0 + 0.0) / 3.0);
}

TEST(PatchMetricsTest, NoDetectionsAndPerfect) {
  auto imgs = patch_fixture();
  for (auto& i : imgs) i.dets.clear();
  const PatchMetrics none = patch_metrics(imgs, 3, 0.5);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_FALSE(none.precision_defined);
  for (auto& i : imgs) i.dets = {{i.patch.box, i.patch.class_id, 0.9}};
  const PatchMetrics all = patch_metrics(imgs, 3, 0.5);
  EXPECT_EQ(all.precision, 1.0);
  EXPECT_EQ(all.recall, 1.0);
}

TEST(PatchMetricsTest, InvisiblePatchIsNeitherTargetNorGroundTruth) {
  auto imgs = patch_fixture();
  imgs[2].visible = false;
  const PatchMetrics m = patch_metrics(imgs, 3, 0.5);
  EXPECT_EQ(m.invisible_patches, 1);
  EXPECT_EQ(m.patches, 3);
  EXPECT_EQ(m.patches_detected, 1);
  EXPECT_EQ(m.candidate_detections, 3);
  EXPECT_EQ(m.recall, 1.0 / 3.0);
}

TEST(PcaTest, LineGivesOne) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({1.0 + i, 2.0 - 2.0 * i, 0.5 * i});
  EXPECT_NEAR(pca_first_component_ratio(rows).ratio, 1.0, 1e-12);
}

TEST(PcaTest, IsotropicGaussianGivesHalf) {
  Rng rng = make_rng(57);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> rows(10000);
  for (auto& r : rows) r = {n(rng), n(rng)};
  EXPECT_NEAR(pca_first_component_ratio(rows).ratio, 0.5, 0.02);
}

TEST(PcaTest, HandBuiltRows) {
  // Centered rows; covariance diag(2/3, 8/3, 0).
  const std::vector<std::vector<double>> rows = {{1, 0, 0}, {-1, 0, 0}, {0, 2, 0}, {0, -2, 0}};
  EXPECT_NEAR(pca_first_component_ratio(rows).ratio, 0.8, 1e-15);
  const auto cov = oracle::covariance(rows);
  EXPECT_NEAR(cov[0][0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(cov[1][1], 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(oracle::pca_ratio_direct(rows), 0.8, 1e-15);
}

TEST(PcaTest, MatchesDirectEigendecomposition) {
  EXPECT_LE(oracle::pca_max_deviation(58, 200), 1e-9);
  // More dimensions than rows.
  Rng rng = make_rng(59);
  std::vector<std::vector<double>> wide(6, std::vector<double>(40));
  for (auto& r : wide)
    for (double& v : r) v = uniform(rng, -1, 1);
  EXPECT_NEAR(pca_first_component_ratio(wide).ratio, oracle::pca_ratio_direct(wide), 1e-9);
}

TEST(PcaTest, BoundsAndDegenerate) {
  Rng rng = make_rng(60);
  for (int k = 0; k < 50; ++k) {
    std::vector<std::vector<double>> rows(30, std::vector<double>(5));
    for (auto& r : rows)
      for (double& v : r) v = uniform(rng, -1, 1);
    const double r = pca_first_component_ratio(rows).ratio;
    ASSERT_GE(r, 1.0 / 5.0 - 1e-12);
    ASSERT_LE(r, 1.0 + 1e-12);
  }
  const PcaRatio d = pca_first_component_ratio({{1, 2}, {1, 2}, {1, 2}});
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.ratio, 1.0);
  EXPECT_THROW(pca_first_component_ratio({{1, 2}}), std::invalid_argument);
  EXPECT_THROW(pca_first_component_ratio({{1, 2}, {1}}), std::invalid_argument);
}

TEST(DominantLabelTest, MostFrequentThenLowest) {
  const Box b = corners(0.1, 0.1, 0.2, 0.2);
  EXPECT_EQ(dominant_label({}), 0);
  EXPECT_EQ(dominant_label({{b, 3}, {b, 2}, {b, 3}}), 3);
  EXPECT_EQ(dominant_label({{b, 3}, {b, 2}}), 2);
}

}  // namespace
}  // namespace boxmix
