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
#include "oracles/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "boxmix/evaluation.hpp"
#include "boxmix/loss.hpp"
#include "boxmix/matching.hpp"
#include "boxmix/mixing.hpp"
#include "boxmix/rng.hpp"
#include "oracles/brute_force.hpp"
#include "oracles/gradient_check.hpp"
#include "oracles/linalg.hpp"

namespace boxmix::oracle {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void note(Equivalence& e, bool same, int instance, const char* what) {
  ++e.instances;
  if (same) return;
  if (e.mismatches++ == 0) e.first_failure = std::string(what) + " differs on instance " + std::to_string(instance);
}

bool same_metrics(const CocoMetrics& a, const CocoMetrics& b) {
  return a.ap == b.ap && a.ap50 == b.ap50 && a.ap75 == b.ap75 && a.ap_small == b.ap_small &&
         a.ap_medium == b.ap_medium && a.ap_large == b.ap_large && a.ar1 == b.ar1 && a.ar10 == b.ar10 &&
         a.ar100 == b.ar100 && a.ar_small == b.ar_small && a.ar_medium == b.ar_medium && a.ar_large == b.ar_large;
}

struct RandomEvalSet {
  std::vector<ImageDetections> dets;
  std::vector<GroundTruth> gts;
};

RandomEvalSet random_eval_set(Rng& rng, int num_classes, int max_images, int max_gt, int max_dets) {
  RandomEvalSet s;
  const auto images = 1 + uniform_index(rng, static_cast<std::uint64_t>(max_images));
  for (std::uint64_t i = 0; i < images; ++i) {
    s.gts.push_back(random_ground_truth(rng, max_gt, num_classes));
    s.dets.push_back(random_detections(rng, max_dets, num_classes, s.gts.back()));
  }
  return s;
}

}  // namespace

Equivalence match_equivalence(std::uint64_t seed, int instances) {
  Equivalence e;
  Rng rng = make_rng(seed, {0x11});
  constexpr double taus[] = {0.3, 0.5, 0.7};
  for (int k = 0; k < instances; ++k) {
    const AnchorSet anchors = build_anchor_set(random_anchor_spec(rng));
    const GroundTruth gt = random_ground_truth(rng, 20, 3);
    const double tau = taus[uniform_index(rng, 3)];
    const auto got = match_with_assignment(gt, anchors, tau, 3).assigned_gt;
    note(e, got == match_assignment(gt, anchors.boxes(), tau), k, "match");
  }
  return e;
}

Equivalence nms_equivalence(std::uint64_t seed, int instances) {
  Equivalence e;
  Rng rng = make_rng(seed, {0x12});
  constexpr double thresholds[] = {0.3, 0.45, 0.5, 0.7};
  constexpr int budgets[] = {3, 10, 200};
  for (int k = 0; k < instances; ++k) {
    const GroundTruth near = random_ground_truth(rng, 6, 3);
    const ImageDetections dets = random_detections(rng, 50, 3, near);
    const double thr = thresholds[uniform_index(rng, 4)];
    const int top_k = budgets[uniform_index(rng, 3)];
    note(e, boxmix::nms(dets, thr, top_k) == oracle::nms(dets, thr, top_k), k, "nms");
  }
  return e;
}

Equivalence voc_equivalence(std::uint64_t seed, int instances) {
  Equivalence e;
  Rng rng = make_rng(seed, {0x13});
  for (int k = 0; k < instances; ++k) {
    const auto s = random_eval_set(rng, 3, 3, 5, 8);
    bool same = true;
    for (double thr : {0.5, 0.75})
      for (ApStyle style : {ApStyle::kElevenPoint, ApStyle::kAllPoint}) {
        const VocResult a = boxmix::voc_map(s.dets, s.gts, 3, thr, style);
        const VocResult b = oracle::voc_map(s.dets, s.gts, 3, thr, style);
        same = same && a.per_class_ap == b.per_class_ap && a.map == b.map;
      }
    note(e, same, k, "voc_map");
  }
  return e;
}

Equivalence coco_equivalence(std::uint64_t seed, int instances) {
  Equivalence e;
  Rng rng = make_rng(seed, {0x14});
  for (int k = 0; k < instances; ++k) {
    const auto s = random_eval_set(rng, 2, 2, 8, 14);
    note(e, same_metrics(boxmix::coco_ap(s.dets, s.gts, 2), oracle::coco_ap(s.dets, s.gts, 2)), k, "coco_ap");
  }
  return e;
}

double iou_max_deviation(std::uint64_t seed, int pairs) {
  Rng rng = make_rng(seed, {0x15});
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Box a = random_box(rng), b = random_box(rng);
    worst = std::max(worst, std::abs(boxmix::iou(a, b) - oracle::iou(a, b)));
  }
  return worst;
}

double loss_linearity_max_deviation(std::uint64_t seed, int triples) {
  Rng rng = make_rng(seed, {0x16});
  double worst = 0.0;
  constexpr int kWidth = 4;
  auto distribution = [&] {
    std::vector<double> p(kWidth);
    double sum = 0.0;
    for (double& v : p) sum += (v = uniform01(rng));
    for (double& v : p) v /= sum;
    return p;
  };
  for (int k = 0; k < triples; ++k) {
    const auto p = distribution(), q = distribution();
    std::vector<double> logits(kWidth);
    for (double& v : logits) v = uniform(rng, -5.0, 5.0);
    const double lam = uniform01(rng);
    std::vector<double> mixed(kWidth);
    for (int c = 0; c < kWidth; ++c) mixed[c] = lam * p[c] + (1.0 - lam) * q[c];
    const double lhs = classification_loss(mixed, logits);
    const double rhs = lam * classification_loss(p, logits) + (1.0 - lam) * classification_loss(q, logits);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double pca_max_deviation(std::uint64_t seed, int groups) {
  Rng rng = make_rng(seed, {0x17});
  double worst = 0.0;
  for (int k = 0; k < groups; ++k) {
    const auto n = 2 + uniform_index(rng, 20);
    const auto d = 1 + uniform_index(rng, 12);
    // Anisotropic scales keep the spectrum spread.
    std::vector<double> scale(d);
    for (double& s : scale) s = uniform(rng, 0.1, 3.0);
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows)
      for (std::size_t j = 0; j < d; ++j) r[j] = scale[j] * uniform(rng, -1.0, 1.0);
    worst = std::max(worst, std::abs(pca_first_component_ratio(rows).ratio - pca_ratio_direct(rows)));
  }
  return worst;
}

std::vector<SelfCheckRow> run_selfcheck() {
  std::vector<SelfCheckRow> rows;
  auto equivalence_row = [&](const std::string& name, const Equivalence& e) {
    rows.push_back({name, e.ok(),
                    std::to_string(e.instances - e.mismatches) + "/" + std::to_string(e.instances) + " agree" +
                        (e.ok() ? "" : "; " + e.first_failure)});
  };
  const double iou_dev = iou_max_deviation(1, 2000);
  rows.push_back({"iou_vs_oracle", iou_dev <= 1e-12, "max deviation " + fmt("%.3g", iou_dev)});
  equivalence_row("match_vs_oracle", match_equivalence(1, 100));
  equivalence_row("nms_vs_oracle", nms_equivalence(1, 100));
  equivalence_row("voc_map_vs_oracle", voc_equivalence(1, 100));
  equivalence_row("coco_ap_vs_oracle", coco_equivalence(1, 50));

  const double lin = loss_linearity_max_deviation(1, 1000);
  rows.push_back({"loss_linearity", lin <= 1e-12, "max deviation " + fmt("%.3g", lin)});

  {
    const auto f = make_gradient_fixture(1, false);
    const AnchorTargets other = make_gradient_fixture(2, true).targets;
    const bool identity = box_mix(f.targets, other, MixWeight{1.0, 0.2}) == f.targets;
    rows.push_back({"box_mix_identity", identity, identity ? "lambda=1 returns the first targets" : "differs"});
  }
  for (bool mixed : {false, true}) {
    const auto report = check_detection_gradients(make_gradient_fixture(3, mixed));
    rows.push_back({mixed ? "gradient_check_mixed" : "gradient_check", report.max_rel_error < 1e-4,
                    std::to_string(report.checked) + " entries, max rel error " + fmt("%.3g", report.max_rel_error) +
                        " (" + report.worst + ")"});
  }
  const double pca = pca_max_deviation(1, 50);
  rows.push_back({"pca_vs_jacobi", pca <= 1e-9, "max deviation " + fmt("%.3g", pca)});
  return rows;
}

void print_selfcheck(std::ostream& os, const std::vector<SelfCheckRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  for (const auto& r : rows) {
    os << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ') << r.detail
       << "\n";
  }
}

}  // namespace boxmix::oracle
