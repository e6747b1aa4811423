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
#include "boxmix/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace boxmix {

namespace {

constexpr double kPositiveEps = 1e-6;
constexpr double kNormTolerance = 1e-9;

// log-sum-exp with the max subtracted.
double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (x >= 1.0) return 1.0;
  if (x <= -1.0) return -1.0;
  return x;
}

double regression_loss(const OffsetVector& target, std::span<const double> pred) {
  if (!target) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += smooth_l1((*target)[i] - pred[i]);
  return s;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= s;
  return p;
}

double classification_loss(std::span<const double> target, std::span<const double> logits) {
  if (target.size() != logits.size()) throw std::invalid_argument("classification_loss: size mismatch");
  const double total = std::accumulate(target.begin(), target.end(), 0.0);
  if (std::abs(total - 1.0) > kNormTolerance) throw std::invalid_argument("classification_loss: target not normalized");
  const double lse = log_sum_exp(logits);
  double loss = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c)
    if (target[c] != 0.0) loss -= target[c] * (logits[c] - lse);
  return loss;
}

std::vector<bool> hard_negative_mining(std::span<const double> cls_losses, const std::vector<bool>& positives,
                                       double ratio, const std::vector<bool>& subset) {
  const std::size_t n = cls_losses.size();
  if (positives.size() != n || (!subset.empty() && subset.size() != n))
    throw std::invalid_argument("hard_negative_mining: size mismatch");
  if (!(ratio > 0.0)) throw std::invalid_argument("hard_negative_mining: ratio must be positive");

  std::vector<bool> keep(n, false);
  std::vector<std::size_t> negatives;
  std::size_t n_pos = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!subset.empty() && !subset[a]) continue;
    if (positives[a]) {
      keep[a] = true;
      ++n_pos;
    } else {
      negatives.push_back(a);
    }
  }
  std::size_t quota = n_pos == 0 ? 1 : static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n_pos)));
  quota = std::min(quota, negatives.size());
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(quota), negatives.end(),
                    [&](std::size_t l, std::size_t r) {
                      if (cls_losses[l] != cls_losses[r]) return cls_losses[l] > cls_losses[r];
                      return l < r;
                    });
  for (std::size_t i = 0; i < quota; ++i) keep[negatives[i]] = true;
  return keep;
}

DetectionLoss detection_loss_with_grad(const AnchorTargets& targets, const PredictionField& preds, double ratio,
                                       const std::vector<bool>& subset) {
  const std::size_t n = targets.size();
  if (preds.size() != n || preds.num_classes() != targets.num_classes())
    throw std::invalid_argument("detection_loss: targets and predictions are misaligned");
  if (!subset.empty() && subset.size() != n) throw std::invalid_argument("detection_loss: subset size mismatch");
  auto in_subset = [&](std::size_t a) { return subset.empty() || subset[a]; };

  const auto positives = positives_mask(targets, kPositiveEps);
  std::vector<double> cls_losses(n, 0.0);
  int n_pos = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!in_subset(a)) continue;
    cls_losses[a] = classification_loss(targets.label(a), preds.logits(a));
    if (positives[a]) ++n_pos;
  }

  DetectionLoss out{{}, PredictionField(n, preds.num_classes()), {}};
  if (!subset.empty() && std::none_of(subset.begin(), subset.end(), [](bool b) { return b; })) {
    out.kept.assign(n, false);
    return out;
  }
  out.kept = hard_negative_mining(cls_losses, positives, ratio, subset);

  const double norm = 1.0 / std::max(n_pos, 1);
  double cls = 0.0;
  double reg = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!in_subset(a)) continue;
    if (out.kept[a]) {
      cls += cls_losses[a];
      const auto p = softmax(preds.logits(a));
      const auto t = targets.label(a);
      auto g = out.grad.logits(a);
      for (std::size_t c = 0; c < p.size(); ++c) g[c] = (p[c] - t[c]) * norm;
    }
    const auto& off = targets.offset(a);
    if (off) {
      const auto pred = preds.offsets(a);
      reg += regression_loss(off, pred);
      auto g = out.grad.offsets(a);
      for (std::size_t i = 0; i < 4; ++i) g[i] = -smooth_l1_grad((*off)[i] - pred[i]) * norm;
    }
  }
  out.parts.cls = cls * norm;
  out.parts.reg = reg * norm;
  out.parts.total = out.parts.cls + out.parts.reg;
  out.parts.n_pos = n_pos;
  return out;
}

LossBreakdown detection_loss(const AnchorTargets& targets, const PredictionField& preds, double ratio,
                             const std::vector<bool>& subset) {
  return detection_loss_with_grad(targets, preds, ratio, subset).parts;
}

}  // namespace boxmix
