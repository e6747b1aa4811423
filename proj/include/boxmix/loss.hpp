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
#include "boxmix/matching.hpp"

namespace boxmix {

/// Raw detector output: per anchor C+1 class logits and 4 offsets, in
/// anchor flat order.
class PredictionField {
 public:
  PredictionField() = default;
  PredictionField(std::size_t num_anchors, int num_classes)
      : num_anchors_(num_anchors), num_classes_(num_classes),
        logits_(num_anchors * static_cast<std::size_t>(num_classes + 1), 0.0),
        offsets_(num_anchors * 4, 0.0) {}

  std::size_t size() const { return num_anchors_; }
  int num_classes() const { return num_classes_; }
  int logit_width() const { return num_classes_ + 1; }

  std::span<double> logits(std::size_t a) {
    return {logits_.data() + a * logit_width(), static_cast<std::size_t>(logit_width())};
  }
  std::span<const double> logits(std::size_t a) const {
    return {logits_.data() + a * logit_width(), static_cast<std::size_t>(logit_width())};
  }
  std::span<double> offsets(std::size_t a) { return {offsets_.data() + a * 4, 4}; }
  std::span<const double> offsets(std::size_t a) const { return {offsets_.data() + a * 4, 4}; }

  std::vector<double>& all_logits() { return logits_; }
  const std::vector<double>& all_logits() const { return logits_; }
  std::vector<double>& all_offsets() { return offsets_; }
  const std::vector<double>& all_offsets() const { return offsets_; }

  friend bool operator==(const PredictionField&, const PredictionField&) = default;

 private:
  std::size_t num_anchors_ = 0;
  int num_classes_ = 0;
  std::vector<double> logits_;
  std::vector<double> offsets_;
};

struct LossBreakdown {
  double cls = 0.0;
  double reg = 0.0;
  double total = 0.0;
  int n_pos = 0;
};

inline constexpr double kDefaultMiningRatio = 3.0;

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
double smooth_l1(double x);
double smooth_l1_grad(double x);

/// Sum of smooth_l1 over the four components; 0 for an undefined target.
double regression_loss(const OffsetVector& target, std::span<const double> pred);

/// Soft-label cross-entropy -sum_c target_c * log softmax(logits)_c.
/// Throws std::invalid_argument when the target does not sum to 1.
double classification_loss(std::span<const double> target, std::span<const double> logits);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Keeps every positive and the ceil(ratio * n_pos) negatives with the
/// largest classification loss (ties: lower anchor index). With no
/// positives the single hardest negative is kept. Anchors outside a
/// non-empty `subset` are never kept.
std::vector<bool> hard_negative_mining(std::span<const double> cls_losses, const std::vector<bool>& positives,
                                       double ratio, const std::vector<bool>& subset = {});

struct DetectionLoss {
  LossBreakdown parts;
  PredictionField grad;     // d total / d predictions
  std::vector<bool> kept;   // mining keep-mask
};

/// Mixed-target detection criterion, optionally restricted to a subset of
/// anchors (empty subset = all anchors). Classification is summed over the
/// mined anchors, regression over the anchors with defined offsets, both
/// divided by max(n_pos, 1). The keep-mask is treated as a constant for
/// the gradient.
DetectionLoss detection_loss_with_grad(const AnchorTargets& targets, const PredictionField& preds,
                                       double ratio = kDefaultMiningRatio,
                                       const std::vector<bool>& subset = {});

LossBreakdown detection_loss(const AnchorTargets& targets, const PredictionField& preds,
                             double ratio = kDefaultMiningRatio, const std::vector<bool>& subset = {});

}  // namespace boxmix
