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

#include <span>
#include <vector>

#include "boxmix/geometry.hpp"

namespace boxmix {

inline constexpr int kBackground = 0;

struct LabeledBox {
  Box box;
  int class_id = 1;  // 1..C; 0 is reserved for background
  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

using GroundTruth = std::vector<LabeledBox>;

/// Per-anchor regression and classification targets: one offset and one
/// probability vector over C+1 entries (entry 0 = background) per anchor.
class AnchorTargets {
 public:
  AnchorTargets() = default;
  /// All anchors background with undefined offsets.
  AnchorTargets(std::size_t num_anchors, int num_classes);

  std::size_t size() const { return offsets_.size(); }
  int num_classes() const { return num_classes_; }
  int label_width() const { return num_classes_ + 1; }

  const OffsetVector& offset(std::size_t a) const { return offsets_[a]; }
  OffsetVector& offset(std::size_t a) { return offsets_[a]; }
  std::span<const double> label(std::size_t a) const {
    return {labels_.data() + a * label_width(), static_cast<std::size_t>(label_width())};
  }
  std::span<double> label(std::size_t a) {
    return {labels_.data() + a * label_width(), static_cast<std::size_t>(label_width())};
  }
  void set_one_hot(std::size_t a, int class_id);

  friend bool operator==(const AnchorTargets&, const AnchorTargets&) = default;

 private:
  int num_classes_ = 0;
  std::vector<OffsetVector> offsets_;
  std::vector<double> labels_;
};

struct MatchResult {
  AnchorTargets targets;
  std::vector<int> assigned_gt;  // per anchor; -1 for background
};

/// IoU threshold matching with a best-match guarantee.
///
/// Every ground truth first claims an anchor: pairs are taken greedily by
/// decreasing IoU (ties: lower gt index, then lower anchor index), skipping
/// ground truths already served and anchors already claimed. The remaining
/// anchors take their highest-IoU ground truth when that IoU exceeds tau
/// (ties: lower gt index) and are background otherwise.
///
/// Throws std::invalid_argument unless 0 < tau < 1, or on a class id
/// outside [1, num_classes].
MatchResult match_with_assignment(const GroundTruth& y, const AnchorSet& anchors, double tau,
                                  int num_classes, OffsetVariances v = {});

AnchorTargets match(const GroundTruth& y, const AnchorSet& anchors, double tau, int num_classes,
                    OffsetVariances v = {});

/// An anchor is positive iff its background mass is below 1 - eps.
std::vector<bool> positives_mask(const AnchorTargets& t, double eps = 1e-6);

}  // namespace boxmix
