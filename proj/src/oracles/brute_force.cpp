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
#include "oracles/brute_force.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace boxmix::oracle {

double iou(const Box& a, const Box& b) {
  std::array<double, 4> xs{a.x1(), a.x2(), b.x1(), b.x2()};
  std::array<double, 4> ys{a.y1(), a.y2(), b.y1(), b.y2()};
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto inside = [](const Box& box, double x, double y) {
    return x > box.x1() && x < box.x2() && y > box.y1() && y < box.y2();
  };
  double inter = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double mx = 0.5 * (xs[i] + xs[i + 1]);
      const double my = 0.5 * (ys[j] + ys[j + 1]);
      if (inside(a, mx, my) && inside(b, mx, my)) inter += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<int> match_assignment(const GroundTruth& y, const std::vector<Box>& anchors, double tau) {
  std::vector<int> assigned(anchors.size(), -1);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    double best = -1.0;
    for (std::size_t g = 0; g < y.size(); ++g) {
      const double o = boxmix::iou(anchors[a], y[g].box);
      if (o > tau && o > best) {
        best = o;
        assigned[a] = static_cast<int>(g);
      }
    }
  }
  std::vector<bool> gt_done(y.size(), false);
  std::vector<bool> anchor_taken(anchors.size(), false);
  for (std::size_t round = 0; round < y.size() && round < anchors.size(); ++round) {
    int bg = -1, ba = -1;
    double best = -1.0;
    for (std::size_t g = 0; g < y.size(); ++g) {
      if (gt_done[g]) continue;
      for (std::size_t a = 0; a < anchors.size(); ++a) {
        if (anchor_taken[a]) continue;
        const double o = boxmix::iou(anchors[a], y[g].box);
        if (o > best) {
          best = o;
          bg = static_cast<int>(g);
          ba = static_cast<int>(a);
        }
      }
    }
    gt_done[static_cast<std::size_t>(bg)] = true;
    anchor_taken[static_cast<std::size_t>(ba)] = true;
    assigned[static_cast<std::size_t>(ba)] = bg;
  }
  return assigned;
}

namespace {

// Index of the best remaining detection: highest score, then lowest index.
std::size_t pick_best(const std::vector<Detection>& dets, const std::vector<bool>& taken) {
  std::size_t best = dets.size();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (taken[i]) continue;
    if (best == dets.size() || dets[i].score > dets[best].score) best = i;
  }
  return best;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thr, int top_k) {
  std::vector<bool> visited(dets.size(), false);
  std::vector<bool> kept(dets.size(), false);
  for (std::size_t round = 0; round < dets.size(); ++round) {
    const std::size_t i = pick_best(dets, visited);
    visited[i] = true;
    bool keep = true;
    for (std::size_t j = 0; j < dets.size(); ++j)
      if (kept[j] && dets[j].class_id == dets[i].class_id && boxmix::iou(dets[i].box, dets[j].box) >= iou_thr)
        keep = false;
    kept[i] = keep;
  }
  std::vector<bool> emitted(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) emitted[i] = !kept[i];
  std::vector<Detection> out;
  while (static_cast<int>(out.size()) < top_k) {
    const std::size_t i = pick_best(dets, emitted);
    if (i == dets.size()) break;
    emitted[i] = true;
    out.push_back(dets[i]);
  }
  return out;
}

PrCurve pr_curve(const std::vector<bool>& is_tp, std::size_t n_gt) {
  PrCurve c;
  for (std::size_t k = 0; k < is_tp.size(); ++k) {
    std::size_t tp = 0;
    for (std::size_t j = 0; j <= k; ++j) tp += is_tp[j] ? 1 : 0;
    c.recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    c.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  return c;
}

double average_precision(const std::vector<bool>& is_tp, std::size_t n_gt, ApStyle style) {
  if (n_gt == 0) return 0.0;
  const PrCurve c = pr_curve(is_tp, n_gt);
  const std::size_t n = is_tp.size();
  double ap = 0.0;
  if (style == ApStyle::kElevenPoint) {
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      double best = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (c.recall[k] >= level) best = std::max(best, c.precision[k]);
      ap += best;
    }
    return ap / 11.0;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double prev = k == 0 ? 0.0 : c.recall[k - 1];
    double best = 0.0;
    for (std::size_t j = k; j < n; ++j) best = std::max(best, c.precision[j]);
    ap += (c.recall[k] - prev) * best;
  }
  return ap;
}

namespace {

struct Ref {
  double score;
  std::size_t image;
  std::size_t det;
};

// Ranks refs by score descending, then image, then position.
std::vector<Ref> rank(std::vector<Ref> refs) {
  std::vector<Ref> out;
  std::vector<bool> used(refs.size(), false);
  for (std::size_t round = 0; round < refs.size(); ++round) {
    std::size_t best = refs.size();
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (used[i]) continue;
      if (best == refs.size()) {
        best = i;
        continue;
      }
      const Ref& a = refs[i];
      const Ref& b = refs[best];
      if (a.score > b.score || (a.score == b.score && (a.image < b.image || (a.image == b.image && a.det < b.det))))
        best = i;
    }
    used[best] = true;
    out.push_back(refs[best]);
  }
  return out;
}

}  // namespace

VocResult voc_map(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes,
                  double iou_thr, ApStyle style) {
  VocResult r;
  r.per_class_ap.assign(static_cast<std::size_t>(num_classes), std::nullopt);
  double sum = 0.0;
  int present = 0;
  for (int c = 1; c <= num_classes; ++c) {
    std::size_t n_gt = 0;
    std::vector<Ref> refs;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      for (const auto& g : gts[i]) n_gt += g.class_id == c ? 1 : 0;
      for (std::size_t j = 0; j < dets[i].size(); ++j)
        if (dets[i][j].class_id == c) refs.push_back({dets[i][j].score, i, j});
    }
    if (n_gt == 0) continue;
    std::vector<std::vector<bool>> claimed(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) claimed[i].assign(gts[i].size(), false);
    std::vector<bool> is_tp;
    for (const Ref& ref : rank(refs)) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts[ref.image].size(); ++g) {
        const auto& gt = gts[ref.image][g];
        if (gt.class_id != c || claimed[ref.image][g]) continue;
        const double o = boxmix::iou(dets[ref.image][ref.det].box, gt.box);
        if (o < iou_thr) continue;
        if (best < 0 || o > best_iou) {
          best = static_cast<int>(g);
          best_iou = o;
        }
      }
      if (best >= 0) claimed[ref.image][static_cast<std::size_t>(best)] = true;
      is_tp.push_back(best >= 0);
    }
    const double ap = oracle::average_precision(is_tp, n_gt, style);
    r.per_class_ap[static_cast<std::size_t>(c - 1)] = ap;
    sum += ap;
    ++present;
  }
  r.map = present ? sum / present : 0.0;
  return r;
}

namespace {

struct CocoCell {
  std::vector<bool> is_tp;
  std::size_t n_gt = 0;
};

// One (class, area range, budget, threshold) evaluation.
CocoCell coco_cell(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int c, double lo,
                   double hi, std::size_t budget, double thr) {
  auto in_range = [&](const Box& b) { return b.area() >= lo && b.area() < hi; };
  CocoCell cell;
  struct Outcome {
    bool tp;
    bool ignore;
  };
  std::vector<Ref> refs;
  std::vector<std::vector<Outcome>> outcome(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    std::vector<std::size_t> gidx;
    for (std::size_t g = 0; g < gts[i].size(); ++g)
      if (gts[i][g].class_id == c) {
        gidx.push_back(g);
        if (in_range(gts[i][g].box)) ++cell.n_gt;
      }
    std::vector<Ref> mine;
    for (std::size_t j = 0; j < dets[i].size(); ++j)
      if (dets[i][j].class_id == c) mine.push_back({dets[i][j].score, i, j});
    std::vector<Ref> ranked = rank(mine);
    if (ranked.size() > budget) ranked.resize(budget);
    std::vector<bool> claimed(gidx.size(), false);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const Box& d = dets[i][ranked[r].det].box;
      // Preference: in-range over out-of-range, then IoU, then index.
      int best = -1;
      bool best_ignored = true;
      double best_iou = 0.0;
      for (std::size_t k = 0; k < gidx.size(); ++k) {
        if (claimed[k]) continue;
        const Box& g = gts[i][gidx[k]].box;
        const double o = boxmix::iou(d, g);
        if (o < thr) continue;
        const bool ignored = !in_range(g);
        const bool better = best < 0 || (!ignored && best_ignored) || (ignored == best_ignored && o > best_iou);
        if (better) {
          best = static_cast<int>(k);
          best_ignored = ignored;
          best_iou = o;
        }
      }
      if (best >= 0) claimed[static_cast<std::size_t>(best)] = true;
      outcome[i].push_back({best >= 0, best >= 0 ? best_ignored : !in_range(d)});
      refs.push_back({ranked[r].score, i, r});
    }
  }
  for (const Ref& ref : rank(refs)) {
    const Outcome& o = outcome[ref.image][ref.det];
    if (!o.ignore) cell.is_tp.push_back(o.tp);
  }
  return cell;
}

std::optional<double> coco_summary(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts,
                                   int num_classes, double lo, double hi, std::size_t budget,
                                   const std::vector<double>& thresholds, bool recall) {
  double sum = 0.0;
  int valid = 0;
  for (int c = 1; c <= num_classes; ++c) {
    double class_sum = 0.0;
    bool any = false;
    for (double t : thresholds) {
      const CocoCell cell = coco_cell(dets, gts, c, lo, hi, budget, t);
      if (cell.n_gt == 0) break;
      any = true;
      if (recall) {
        std::size_t tp = 0;
        for (bool b : cell.is_tp) tp += b ? 1 : 0;
        class_sum += static_cast<double>(tp) / static_cast<double>(cell.n_gt);
      } else {
        class_sum += oracle::average_precision(cell.is_tp, cell.n_gt, ApStyle::kAllPoint);
      }
    }
    if (!any) continue;
    sum += class_sum / static_cast<double>(thresholds.size());
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  return sum / valid;
}

}  // namespace

CocoMetrics coco_ap(const std::vector<ImageDetections>& dets, const std::vector<GroundTruth>& gts, int num_classes) {
  std::vector<double> all;
  for (int i = 0; i < 10; ++i) all.push_back((50 + 5 * i) / 100.0);
  const double inf = std::numeric_limits<double>::infinity();
  const double s = kCocoSmallArea, m = kCocoMediumArea;
  CocoMetrics r;
  r.ap = coco_summary(dets, gts, num_classes, 0, inf, 100, all, false);
  r.ap50 = coco_summary(dets, gts, num_classes, 0, inf, 100, {all[0]}, false);
  r.ap75 = coco_summary(dets, gts, num_classes, 0, inf, 100, {all[5]}, false);
  r.ap_small = coco_summary(dets, gts, num_classes, 0, s, 100, all, false);
  r.ap_medium = coco_summary(dets, gts, num_classes, s, m, 100, all, false);
  r.ap_large = coco_summary(dets, gts, num_classes, m, inf, 100, all, false);
  r.ar1 = coco_summary(dets, gts, num_classes, 0, inf, 1, all, true);
  r.ar10 = coco_summary(dets, gts, num_classes, 0, inf, 10, all, true);
  r.ar100 = coco_summary(dets, gts, num_classes, 0, inf, 100, all, true);
  r.ar_small = coco_summary(dets, gts, num_classes, 0, s, 100, all, true);
  r.ar_medium = coco_summary(dets, gts, num_classes, s, m, 100, all, true);
  r.ar_large = coco_summary(dets, gts, num_classes, m, inf, 100, all, true);
  return r;
}

Box random_box(Rng& rng) {
  // One box in five is COCO-small, the rest span medium and large.
  const bool small = uniform_index(rng, 5) == 0;
  const double w = small ? 0.01 * static_cast<double>(1 + uniform_index(rng, 4))
                         : 0.05 * static_cast<double>(1 + uniform_index(rng, 10));
  const double h = small ? 0.01 * static_cast<double>(1 + uniform_index(rng, 4))
                         : 0.05 * static_cast<double>(1 + uniform_index(rng, 10));
  const double x1 = 0.05 * static_cast<double>(uniform_index(rng, 10));
  const double y1 = 0.05 * static_cast<double>(uniform_index(rng, 10));
  return Box::from_corners(x1, y1, x1 + w, y1 + h);
}

GroundTruth random_ground_truth(Rng& rng, int max_boxes, int num_classes) {
  GroundTruth gt;
  const auto n = uniform_index(rng, static_cast<std::uint64_t>(max_boxes) + 1);
  for (std::uint64_t i = 0; i < n; ++i)
    gt.push_back({random_box(rng), 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(num_classes)))});
  return gt;
}

ImageDetections random_detections(Rng& rng, int max_dets, int num_classes, const GroundTruth& near) {
  ImageDetections out;
  const auto n = uniform_index(rng, static_cast<std::uint64_t>(max_dets) + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    Detection d;
    if (!near.empty() && uniform_index(rng, 3) != 0) {
      const auto& g = near[uniform_index(rng, near.size())];
      const double dx = 0.01 * (static_cast<double>(uniform_index(rng, 5)) - 2.0);
      const double dy = 0.01 * (static_cast<double>(uniform_index(rng, 5)) - 2.0);
      d.box = Box{g.box.cx + dx, g.box.cy + dy, g.box.w, g.box.h};
      d.class_id = uniform_index(rng, 4) == 0 ? 1 + static_cast<int>(uniform_index(rng, num_classes)) : g.class_id;
    } else {
      d.box = random_box(rng);
      d.class_id = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(num_classes)));
    }
    d.score = 0.1 * static_cast<double>(1 + uniform_index(rng, 9));
    out.push_back(d);
  }
  return out;
}

AnchorGridSpec random_anchor_spec(Rng& rng) {
  AnchorGridSpec spec;
  const int levels = 1 + static_cast<int>(uniform_index(rng, 3));
  int grid = 6 - static_cast<int>(uniform_index(rng, 3));
  double size = 0.1 + 0.05 * static_cast<double>(uniform_index(rng, 3));
  for (int l = 0; l < levels && grid >= 1; ++l) {
    AnchorLevelSpec lv;
    lv.rows = lv.cols = grid;
    lv.sizes = {size, size * 1.3};
    lv.ratios = uniform_index(rng, 2) == 0 ? std::vector<double>{1.0} : std::vector<double>{0.5, 2.0};
    spec.levels.push_back(lv);
    grid = std::max(1, grid / 2);
    size *= 2.0;
  }
  return spec;
}

}  // namespace boxmix::oracle
