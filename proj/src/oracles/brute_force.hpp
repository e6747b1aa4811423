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
#pragma once

// Independent, deliberately naive restatements of the library's geometric
// and metric definitions. Used only by tests and `boxmix selfcheck`.

#include <vector>

#include "boxmix/evaluation.hpp"
#include "boxmix/geometry.hpp"
#include "boxmix/matching.hpp"
#include "boxmix/rng.hpp"

namespace boxmix::oracle {

/// Intersection area by coordinate compression: the union of both boxes'
/// edges splits the plane into cells; a cell counts when inside both.
double iou(const Box& a, const Box& b);

/// Matching by repeated global maximum search: first each anchor takes its
/// best ground truth above tau, then, one ground truth at a time, the
/// highest-IoU (ground truth, anchor) pair among the still-free ones is
/// forced. Ties: lower ground-truth index, then lower anchor index.
std::vector<int> match_assignment(const GroundTruth& y, const std::vector<Box>& anchors, double tau);

/// Literal greedy NMS by repeated selection of the best remaining score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, int top_k);

/// Precision/recall enumeration: precision and recall after every rank.
struct PrCurve {
  std::vector<double> precision;
  std::vector<double> recall;
};
PrCurve pr_curve(const std::vector<bool>& is_tp, std::size_t n_gt);

/// AP straight from the definitions: 11-point maxima over recall levels,
/// or the sum of recall steps times the best precision at or after them.
double average_precision(const std::vector<bool>& is_tp, std::size_t n_gt, ApStyle style);

VocResult voc_map(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes,
                  double iou_thr, ApStyle style);

CocoMetrics coco_ap(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes);

// Random instances shaped to provoke ties: coordinates on a 0.05 grid,
// scores from a handful of values, a share of COCO-small boxes.
Box random_box(Rng& rng);
GroundTruth random_ground_truth(Rng& rng, int max_boxes, int num_classes);
ImageDetections random_detections(Rng& rng, int max_dets, int num_classes, const GroundTruth& near);
/// Up to three levels, at most 200 anchors in total.
AnchorGridSpec random_anchor_spec(Rng& rng);

}  // namespace boxmix::oracle
