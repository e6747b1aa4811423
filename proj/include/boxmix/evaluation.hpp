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

#include <optional>
#include <vector>

#include "boxmix/geometry.hpp"
#include "boxmix/loss.hpp"
#include "boxmix/matching.hpp"

namespace boxmix {

struct Detection {
  Box box;
  int class_id = 1;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

using ImageDetections = std::vector<Detection>;

/// One detection per (anchor, object class) whose softmax score reaches
/// score_thr, with the decoded box clipped to the unit square. Anchors are
/// visited in flat order, classes in increasing id.
std::vector<Detection> decode_predictions(const PredictionField& preds, const AnchorSet& anchors, double score_thr,
                                          OffsetVariances v = {});

/// Per-class greedy suppression (score descending, ties by input order),
/// then the top_k highest scores across classes. Output is sorted by score
/// descending, ties by input order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, int top_k);

enum class ApStyle { kElevenPoint, kAllPoint };

struct VocResult {
  /// Indexed by class_id - 1; nullopt for classes without ground truth.
  std::vector<std::optional<double>> per_class_ap;
  /// Mean over classes that have ground truth; 0 when none do.
  double map = 0.0;
};

/// Detections of a class are ranked by score (ties: image order, then
/// detection order) and each is matched to the highest-IoU still-unmatched
/// ground truth of its class in its image with IoU >= iou_thr.
VocResult voc_map(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes,
                  double iou_thr = 0.5, ApStyle style = ApStyle::kElevenPoint);

/// Average precision of a ranked list of true/false positives against
/// n_gt ground truths.
double average_precision(const std::vector<bool>& is_tp, std::size_t n_gt, ApStyle style);

/// Normalized COCO size buckets: the pixel thresholds 32^2 and 96^2
/// rescaled to a 640-pixel reference side.
inline constexpr double kCocoSmallArea = (32.0 / 640.0) * (32.0 / 640.0);
inline constexpr double kCocoMediumArea = (96.0 / 640.0) * (96.0 / 640.0);

/// COCO-style summary. A bucket without any ground truth is nullopt.
struct CocoMetrics {
  std::optional<double> ap, ap50, ap75, ap_small, ap_medium, ap_large;
  std::optional<double> ar1, ar10, ar100, ar_small, ar_medium, ar_large;
};

/// AP over IoU thresholds 0.50:0.05:0.95 with all-point interpolation; AR
/// is the final recall at the per-image detection budget, averaged over the
/// same thresholds. Ground truths outside a size bucket are ignored (a
/// detection matched to one is ignored too, as is an unmatched detection
/// whose own area is outside the bucket).
CocoMetrics coco_ap(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes);

/// Thresholds used by coco_ap, (50 + 5 i) / 100.
std::vector<double> coco_iou_thresholds();

struct PatchImage {
  ImageDetections dets;
  LabeledBox patch;
  GroundTruth others;
  bool visible = true;  // false for a fully transparent patch
};

struct PatchMetrics {
  int patches = 0;
  int patches_detected = 0;
  int candidate_detections = 0;  // denominators of patch precision
  int true_positive_detections = 0;
  double precision = 0.0;
  bool precision_defined = false;  // false when no candidate detection exists
  double recall = 0.0;
  double map = 0.0;  // VOC mAP over patches and original objects
  int invisible_patches = 0;
};

/// Patch-only detection quality. A candidate detection has the patch's
/// class and its highest-IoU target (patch first, then the image's other
/// objects; ties to the earlier one; IoU must be positive) is the patch.
/// Per image, the highest-scored candidate with IoU >= iou_thr detects the
/// patch; other candidates count as false positives. An invisible patch
/// is neither a target nor ground truth: it counts as undetected and is
/// tallied in invisible_patches.
PatchMetrics patch_metrics(const std::vector<PatchImage>& images, int num_classes, double iou_thr,
                           ApStyle style = ApStyle::kElevenPoint);

struct PcaRatio {
  double ratio = 1.0;
  bool degenerate = false;  // zero total variance
};

/// Fraction of the total variance explained by the first principal
/// component. Throws std::invalid_argument for fewer than two rows or rows
/// of unequal dimension.
PcaRatio pca_first_component_ratio(const std::vector<std::vector<double>>& rows);

/// Most frequent class in an annotation; ties to the lower class id.
/// Returns 0 for an empty annotation.
int dominant_label(const GroundTruth& gt);

}  // namespace boxmix
