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

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace boxmix {

std::vector<Detection> decode_predictions(const PredictionField& preds, const AnchorSet& anchors, double score_thr,
                                          OffsetVariances v) {
  if (preds.size() != anchors.size()) throw std::invalid_argument("decode_predictions: anchor count mismatch");
  std::vector<Detection> out;
  for (std::size_t a = 0; a < preds.size(); ++a) {
    const auto p = softmax(preds.logits(a));
    std::optional<Box> box;
    for (int c = 1; c <= preds.num_classes(); ++c) {
      const double score = p[static_cast<std::size_t>(c)];
      if (score < score_thr) continue;
      if (!box) {
        const auto off = preds.offsets(a);
        box = clip_to_unit(decode_offsets(anchors[a], Offset{off[0], off[1], off[2], off[3]}, v));
        if (!box) break;  // decoded entirely outside the image
      }
      out.push_back(Detection{*box, c, score});
    }
  }
  return out;
}

namespace {

// Indices sorted by score descending, ties by position.
std::vector<std::size_t> rank_by_score(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return dets[l].score > dets[r].score; });
  return order;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, int top_k) {
  if (!(iou_thr > 0.0 && iou_thr < 1.0)) throw std::invalid_argument("nms: iou_thr must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> kept_by_class;
  std::vector<std::size_t> kept;
  for (std::size_t i : rank_by_score(dets)) {
    auto& same = kept_by_class[dets[i].class_id];
    const bool suppressed = std::any_of(same.begin(), same.end(),
                                        [&](std::size_t j) { return iou(dets[i].box, dets[j].box) >= iou_thr; });
    if (suppressed) continue;
    same.push_back(i);
    kept.push_back(i);  // already in global score order
  }
  if (top_k >= 0 && kept.size() > static_cast<std::size_t>(top_k)) kept.resize(static_cast<std::size_t>(top_k));
  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(dets[i]);
  return out;
}

double average_precision(const std::vector<bool>& is_tp, std::size_t n_gt, ApStyle style) {
  if (n_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (is_tp[k]) ++tp;
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  if (style == ApStyle::kElevenPoint) {
    // Sweep from high to low recall carrying the running precision maximum.
    double ap = 0.0;
    double p_max = 0.0;
    std::vector<double> interp(11, 0.0);
    std::size_t k = n;
    for (int t = 10; t >= 0; --t) {
      const double level = t / 10.0;
      while (k > 0 && recall[k - 1] >= level) {
        --k;
        p_max = std::max(p_max, precision[k]);
      }
      // Entries below k have recall < level, so p_max covers exactly recall >= level.
      interp[static_cast<std::size_t>(t)] = p_max;
    }
    for (double v : interp) ap += v;
    return ap / 11.0;
  }
  std::vector<double> envelope(precision);
  for (std::size_t k = n; k-- > 1;) envelope[k - 1] = std::max(envelope[k - 1], envelope[k]);
  double ap = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (recall[k] != prev) {
      ap += (recall[k] - prev) * envelope[k];
      prev = recall[k];
    }
  }
  return ap;
}

VocResult voc_map(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes,
                  double iou_thr, ApStyle style) {
  if (dets.size() != gts.size()) throw std::invalid_argument("voc_map: image count mismatch");
  VocResult res;
  res.per_class_ap.assign(static_cast<std::size_t>(num_classes), std::nullopt);
  double sum = 0.0;
  int present = 0;
  for (int c = 1; c <= num_classes; ++c) {
    struct Ranked {
      double score;
      std::size_t image;
      std::size_t det;
    };
    std::vector<Ranked> ranked;
    std::size_t n_gt = 0;
    std::vector<std::vector<bool>> used(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) {
      used[i].assign(gts[i].size(), false);
      for (const auto& g : gts[i]) n_gt += g.class_id == c;
      for (std::size_t j = 0; j < dets[i].size(); ++j)
        if (dets[i][j].class_id == c) ranked.push_back({dets[i][j].score, i, j});
    }
    if (n_gt == 0) continue;
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& l, const Ranked& r) { return l.score > r.score; });
    std::vector<bool> is_tp;
    is_tp.reserve(ranked.size());
    for (const auto& r : ranked) {
      const Box& box = dets[r.image][r.det].box;
      int best = -1;
      double best_iou = -1.0;
      for (std::size_t g = 0; g < gts[r.image].size(); ++g) {
        if (gts[r.image][g].class_id != c || used[r.image][g]) continue;
        const double o = iou(box, gts[r.image][g].box);
        if (o >= iou_thr && o > best_iou) {
          best_iou = o;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) used[r.image][static_cast<std::size_t>(best)] = true;
      is_tp.push_back(best >= 0);
    }
    const double ap = average_precision(is_tp, n_gt, style);
    res.per_class_ap[static_cast<std::size_t>(c - 1)] = ap;
    sum += ap;
    ++present;
  }
  res.map = present ? sum / present : 0.0;
  return res;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

namespace {

struct AreaRange {
  double lo;
  double hi;
  bool contains(double a) const { return a >= lo && a < hi; }
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr AreaRange kAllAreas{0.0, kInf};
constexpr AreaRange kSmall{0.0, kCocoSmallArea};
constexpr AreaRange kMedium{kCocoSmallArea, kCocoMediumArea};
constexpr AreaRange kLarge{kCocoMediumArea, kInf};

struct ClassCurve {
  std::vector<bool> is_tp;  // non-ignored detections, ranked
  std::size_t n_gt = 0;     // non-ignored ground truths
};

ClassCurve evaluate_class(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int c,
                          AreaRange area, std::size_t max_dets, double thr) {
  struct Entry {
    double score;
    bool tp;
    bool ignore;
  };
  std::vector<Entry> entries;
  ClassCurve curve;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    // Ground truths of class c, in-range ones first.
    std::vector<const LabeledBox*> g;
    for (const auto& gt : gts[i])
      if (gt.class_id == c && area.contains(gt.box.area())) g.push_back(&gt);
    const std::size_t n_in = g.size();
    for (const auto& gt : gts[i])
      if (gt.class_id == c && !area.contains(gt.box.area())) g.push_back(&gt);
    curve.n_gt += n_in;

    std::vector<Detection> d;
    for (const auto& det : dets[i])
      if (det.class_id == c) d.push_back(det);
    std::stable_sort(d.begin(), d.end(), [](const Detection& l, const Detection& r) { return l.score > r.score; });
    if (d.size() > max_dets) d.resize(max_dets);

    std::vector<bool> used(g.size(), false);
    for (const auto& det : d) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (used[k]) continue;
        if (best >= 0 && static_cast<std::size_t>(best) < n_in && k >= n_in) break;
        const double o = iou(det.box, g[k]->box);
        if (o < thr) continue;
        if (best < 0 || o > best_iou) {
          best = static_cast<int>(k);
          best_iou = o;
        }
      }
      if (best >= 0) {
        used[static_cast<std::size_t>(best)] = true;
        entries.push_back({det.score, true, static_cast<std::size_t>(best) >= n_in});
      } else {
        entries.push_back({det.score, false, !area.contains(det.box.area())});
      }
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) { return l.score > r.score; });
  for (const auto& e : entries)
    if (!e.ignore) curve.is_tp.push_back(e.tp);
  return curve;
}

// Mean over classes with ground truth of the per-class mean over thresholds.
std::optional<double> summarize(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts,
                                int num_classes, AreaRange area, std::size_t max_dets,
                                const std::vector<double>& thresholds, bool recall) {
  double sum = 0.0;
  int valid = 0;
  for (int c = 1; c <= num_classes; ++c) {
    double class_sum = 0.0;
    bool has_gt = false;
    for (double t : thresholds) {
      const ClassCurve curve = evaluate_class(dets, gts, c, area, max_dets, t);
      if (curve.n_gt == 0) break;
      has_gt = true;
      if (recall) {
        const auto tp = static_cast<double>(std::count(curve.is_tp.begin(), curve.is_tp.end(), true));
        class_sum += tp / static_cast<double>(curve.n_gt);
      } else {
        class_sum += average_precision(curve.is_tp, curve.n_gt, ApStyle::kAllPoint);
      }
    }
    if (!has_gt) continue;
    sum += class_sum / static_cast<double>(thresholds.size());
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  return sum / valid;
}

}  // namespace

CocoMetrics coco_ap(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes) {
  if (dets.size() != gts.size()) throw std::invalid_argument("coco_ap: image count mismatch");
  const auto all = coco_iou_thresholds();
  const std::vector<double> t50{all[0]}, t75{all[5]};
  CocoMetrics m;
  m.ap = summarize(dets, gts, num_classes, kAllAreas, 100, all, false);
  m.ap50 = summarize(dets, gts, num_classes, kAllAreas, 100, t50, false);
  m.ap75 = summarize(dets, gts, num_classes, kAllAreas, 100, t75, false);
  m.ap_small = summarize(dets, gts, num_classes, kSmall, 100, all, false);
  m.ap_medium = summarize(dets, gts, num_classes, kMedium, 100, all, false);
  m.ap_large = summarize(dets, gts, num_classes, kLarge, 100, all, false);
  m.ar1 = summarize(dets, gts, num_classes, kAllAreas, 1, all, true);
  m.ar10 = summarize(dets, gts, num_classes, kAllAreas, 10, all, true);
  m.ar100 = summarize(dets, gts, num_classes, kAllAreas, 100, all, true);
  m.ar_small = summarize(dets, gts, num_classes, kSmall, 100, all, true);
  m.ar_medium = summarize(dets, gts, num_classes, kMedium, 100, all, true);
  m.ar_large = summarize(dets, gts, num_classes, kLarge, 100, all, true);
  return m;
}

PatchMetrics patch_metrics(const std::vector<PatchImage>& images, int num_classes, double iou_thr, ApStyle style) {
  PatchMetrics m;
  std::vector<ImageDetections> all_dets;
  std::vector<GroundTruth> all_gts;
  for (const auto& img : images) {
    ++m.patches;
    all_dets.push_back(img.dets);
    if (!img.visible) {
      ++m.invisible_patches;
      all_gts.push_back(img.others);
      continue;
    }
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < img.dets.size(); ++j) {
      const auto& d = img.dets[j];
      if (d.class_id != img.patch.class_id) continue;
      const double patch_iou = iou(d.box, img.patch.box);
      if (patch_iou <= 0.0) continue;
      bool patch_is_best = true;
      for (const auto& o : img.others)
        if (iou(d.box, o.box) > patch_iou) patch_is_best = false;
      if (patch_is_best) candidates.push_back(j);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t l, std::size_t r) { return img.dets[l].score > img.dets[r].score; });
    m.candidate_detections += static_cast<int>(candidates.size());
    for (std::size_t j : candidates) {
      if (iou(img.dets[j].box, img.patch.box) >= iou_thr) {
        ++m.patches_detected;
        ++m.true_positive_detections;
        break;
      }
    }
    GroundTruth gt = img.others;
    gt.push_back(img.patch);
    all_gts.push_back(std::move(gt));
  }
  m.recall = m.patches ? static_cast<double>(m.patches_detected) / m.patches : 0.0;
  m.precision_defined = m.candidate_detections > 0;
  m.precision = m.precision_defined ? static_cast<double>(m.true_positive_detections) / m.candidate_detections : 0.0;
  m.map = voc_map(all_dets, all_gts, num_classes, iou_thr, style).map;
  return m;
}

PcaRatio pca_first_component_ratio(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("pca_first_component_ratio: need at least two rows");
  const std::size_t d = rows[0].size();
  if (d == 0) throw std::invalid_argument("pca_first_component_ratio: empty rows");
  for (const auto& r : rows)
    if (r.size() != d) throw std::invalid_argument("pca_first_component_ratio: rows of unequal dimension");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  x.rowwise() -= x.colwise().mean();

  // The covariance X^T X and the Gram matrix X X^T share their non-zero
  // spectrum; decompose whichever is smaller.
  const Eigen::MatrixXd s = (static_cast<Eigen::Index>(d) <= n) ? Eigen::MatrixXd(x.transpose() * x)
                                                                  : Eigen::MatrixXd(x * x.transpose());
  const double total = s.trace();
  if (!(total > 0.0)) return PcaRatio{1.0, true};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_first_component_ratio: eigensolver failed");
  const double top = solver.eigenvalues().maxCoeff();
  return PcaRatio{std::clamp(top / total, 0.0, 1.0), false};
}

int dominant_label(const GroundTruth& gt) {
  std::map<int, int> counts;
  for (const auto& g : gt) ++counts[g.class_id];
  int best = 0, best_count = 0;
  for (const auto& [c, n] : counts)
    if (n > best_count) {
      best = c;
      best_count = n;
    }
  return best;
}

}  // namespace boxmix
