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
#include <functional>
#include <string>
#include <vector>

#include "boxmix/detector.hpp"
#include "boxmix/harness.hpp"
#include "boxmix/matching.hpp"

namespace boxmix::oracle {

using ParamLoss = std::function<double(const ToyDetectorParams&)>;

struct TensorCheck {
  std::string name;  // e.g. "trunk1.weight"
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Relative error used throughout: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Central differences of `loss` against `analytic` for every entry (or a
/// seeded sample of `per_tensor` entries when non-zero).
GradientCheckReport compare_gradients(const ToyDetectorParams& params, const GradientSet& analytic,
                                      const ParamLoss& loss, double h = 1e-6, double floor = 1e-5,
                                      std::size_t per_tensor = 0, std::uint64_t seed = 0);

/// Layer names in ToyDetectorParams order (stem, trunkN, headN).
std::vector<std::string> layer_names(const ToyDetectorParams& params);

/// A deterministic fixture on DetectorSpec::tiny(): random weights and
/// image, and targets from two matched boxes (optionally box-mixed).
struct GradientFixture {
  DetectorSpec spec;
  ToyDetectorParams params;
  ImageTensor image;
  AnchorTargets targets;
};
GradientFixture make_gradient_fixture(std::uint64_t seed, bool mixed_targets);

/// Checks detection_loss(forward(.)) on a fixture; `subset` as in the loss.
GradientCheckReport check_detection_gradients(const GradientFixture& f, const std::vector<bool>& subset = {},
                                              double h = 1e-6, double floor = 1e-5);

/// Checks the summed multi-pass objective of item_gradient.
GradientCheckReport check_item_gradients(const DetectorSpec& spec, const ToyDetectorParams& params,
                                         const std::vector<Pass>& passes, double mining_ratio, double h = 1e-6,
                                         double floor = 1e-5);

}  // namespace boxmix::oracle
