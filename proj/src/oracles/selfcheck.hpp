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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace boxmix::oracle {

/// Outcome of comparing a library routine with its oracle on randomized
/// instances.
struct Equivalence {
  int instances = 0;
  int mismatches = 0;
  std::string first_failure;  // empty when all agree

  bool ok() const { return mismatches == 0; }
};

Equivalence match_equivalence(std::uint64_t seed, int instances);
Equivalence nms_equivalence(std::uint64_t seed, int instances);
/// Both 11-point and all-point at IoU 0.5 and 0.75.
Equivalence voc_equivalence(std::uint64_t seed, int instances);
Equivalence coco_equivalence(std::uint64_t seed, int instances);

/// Largest |iou - oracle::iou| over random pairs.
double iou_max_deviation(std::uint64_t seed, int pairs);

/// Largest |L(λp + (1-λ)q) - (λL(p) + (1-λ)L(q))| of the classification
/// loss over random (p, q, logits, λ) triples.
double loss_linearity_max_deviation(std::uint64_t seed, int triples);

/// Largest |ratio - direct eigendecomposition| over random groups.
double pca_max_deviation(std::uint64_t seed, int groups);

struct SelfCheckRow {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The embedded oracle suites in a fixed order.
std::vector<SelfCheckRow> run_selfcheck();

void print_selfcheck(std::ostream& os, const std::vector<SelfCheckRow>& rows);

}  // namespace boxmix::oracle
