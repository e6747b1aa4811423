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
#include <stdexcept>

namespace boxmix {

AnchorTargets::AnchorTargets(std::size_t num_anchors, int num_classes)
    : num_classes_(num_classes),
      offsets_(num_anchors),
      labels_(num_anchors * static_cast<std::size_t>(num_classes + 1), 0.0) {
  for (std::size_t a = 0; a < num_anchors; ++a) labels_[a * label_width()] = 1.0;
}

void AnchorTargets::set_one_hot(std::size_t a, int class_id) {
  auto row = label(a);
  std::fill(row.begin(), row.end(), 0.0);
  row[static_cast<std::size_t>(class_id)] = 1.0;
}

MatchResult match_with_assignment(const GroundTruth& y, const AnchorSet& anchors, double tau,
                                  int num_classes, OffsetVariances v) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("match: tau must lie in (0, 1)");
  for (const auto& g : y)
    if (g.class_id < 1 || g.class_id > num_classes) throw std::invalid_argument("match: class id out of range");

  const std::size_t n_anchors = anchors.size();
  const std::size_t n_gt = y.size();
  MatchResult res{AnchorTargets(n_anchors, num_classes), std::vector<int>(n_anchors, -1)};
  if (n_gt == 0) return res;

  std::vector<double> overlaps(n_anchors * n_gt);
  for (std::size_t a = 0; a < n_anchors; ++a)
    for (std::size_t g = 0; g < n_gt; ++g) overlaps[a * n_gt + g] = iou(anchors[a], y[g].box);

  // Threshold pass.
  for (std::size_t a = 0; a < n_anchors; ++a) {
    int best = -1;
    double best_iou = tau;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (overlaps[a * n_gt + g] > best_iou) {
        best_iou = overlaps[a * n_gt + g];
        best = static_cast<int>(g);
      }
    }
    res.assigned_gt[a] = best;
  }

  // Best-match guarantee: greedy over all (gt, anchor) pairs.
  struct Pair {
    double iou;
    std::size_t gt;
    std::size_t anchor;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n_anchors * n_gt);
  for (std::size_t a = 0; a < n_anchors; ++a)
    for (std::size_t g = 0; g < n_gt; ++g) pairs.push_back({overlaps[a * n_gt + g], g, a});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
    if (l.iou != r.iou) return l.iou > r.iou;
    if (l.gt != r.gt) return l.gt < r.gt;
    return l.anchor < r.anchor;
  });
  std::vector<bool> gt_served(n_gt, false);
  std::vector<bool> anchor_claimed(n_anchors, false);
  std::size_t served = 0;
  for (const auto& p : pairs) {
    if (served == n_gt) break;
    if (gt_served[p.gt] || anchor_claimed[p.anchor]) continue;
    gt_served[p.gt] = true;
    anchor_claimed[p.anchor] = true;
    res.assigned_gt[p.anchor] = static_cast<int>(p.gt);
    ++served;
  }

  for (std::size_t a = 0; a < n_anchors; ++a) {
    const int g = res.assigned_gt[a];
    if (g < 0) continue;
    const auto& gt = y[static_cast<std::size_t>(g)];
    res.targets.set_one_hot(a, gt.class_id);
    res.targets.offset(a) = encode_offsets(anchors[a], gt.box, v);
  }
  return res;
}

AnchorTargets match(const GroundTruth& y, const AnchorSet& anchors, double tau, int num_classes,
                    OffsetVariances v) {
  return match_with_assignment(y, anchors, tau, num_classes, v).targets;
}

std::vector<bool> positives_mask(const AnchorTargets& t, double eps) {
  std::vector<bool> mask(t.size());
  for (std::size_t a = 0; a < t.size(); ++a) mask[a] = t.label(a)[kBackground] < 1.0 - eps;
  return mask;
}

}  // namespace boxmix
