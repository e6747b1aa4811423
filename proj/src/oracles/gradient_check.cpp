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
#include "oracles/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boxmix/loss.hpp"
#include "boxmix/mixing.hpp"
#include "boxmix/rng.hpp"

namespace boxmix::oracle {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

std::vector<std::string> layer_names(const ToyDetectorParams& params) {
  std::vector<std::string> names{"stem"};
  for (std::size_t i = 0; i < params.num_trunk(); ++i) names.push_back("trunk" + std::to_string(i));
  for (std::size_t i = 0; i < params.num_trunk(); ++i) names.push_back("head" + std::to_string(i));
  return names;
}

GradientCheckReport compare_gradients(const ToyDetectorParams& params, const GradientSet& analytic,
                                      const ParamLoss& loss, double h, double floor, std::size_t per_tensor,
                                      std::uint64_t seed) {
  GradientCheckReport report;
  ToyDetectorParams probe = params;
  const auto names = layer_names(params);
  Rng rng = make_rng(seed, {0x6C});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (int which = 0; which < 2; ++which) {
      std::vector<double>& values = which == 0 ? probe.layers[l].weight.data : probe.layers[l].bias.data;
      const std::vector<double>& grad = which == 0 ? analytic.layers[l].weight.data : analytic.layers[l].bias.data;
      std::vector<std::size_t> idx(values.size());
      std::iota(idx.begin(), idx.end(), 0);
      if (per_tensor > 0 && idx.size() > per_tensor) {
        for (std::size_t i = 0; i < per_tensor; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
        idx.resize(per_tensor);
      }
      TensorCheck tc;
      tc.name = names[l] + (which == 0 ? ".weight" : ".bias");
      for (std::size_t j : idx) {
        const double saved = values[j];
        values[j] = saved + h;
        const double up = loss(probe);
        values[j] = saved - h;
        const double down = loss(probe);
        values[j] = saved;
        const double numeric = (up - down) / (2.0 * h);
        tc.max_rel_error = std::max(tc.max_rel_error, relative_error(grad[j], numeric, floor));
        ++tc.checked;
      }
      report.checked += tc.checked;
      if (tc.max_rel_error >= report.max_rel_error) {
        report.max_rel_error = tc.max_rel_error;
        report.worst = tc.name;
      }
      report.tensors.push_back(tc);
    }
  }
  return report;
}

GradientFixture make_gradient_fixture(std::uint64_t seed, bool mixed_targets) {
  GradientFixture f;
  f.spec = DetectorSpec::tiny();
  f.params = init_params(f.spec, seed);
  Rng rng = make_rng(seed, {0x9F});
  // Non-zero biases so that no unit sits exactly at the ReLU kink.
  for (auto& layer : f.params.layers)
    for (double& b : layer.bias.data) b = uniform(rng, -0.1, 0.1);
  f.image = ImageTensor(f.spec.input_size, f.spec.input_size, f.spec.input_channels);
  for (double& v : f.image.data()) v = uniform01(rng);

  const AnchorSet anchors = build_anchor_set(f.spec.anchors);
  const GroundTruth a = {{Box{0.30, 0.30, 0.40, 0.40}, 1}, {Box{0.65, 0.60, 0.50, 0.60}, 2}};
  const GroundTruth b = {{Box{0.50, 0.45, 0.80, 0.70}, 3}, {Box{0.20, 0.75, 0.30, 0.30}, 1}};
  f.targets = match(a, anchors, 0.5, f.spec.num_classes);
  if (mixed_targets) f.targets = box_mix(f.targets, match(b, anchors, 0.5, f.spec.num_classes), MixWeight{0.35, 0.2});
  return f;
}

GradientCheckReport check_detection_gradients(const GradientFixture& f, const std::vector<bool>& subset, double h,
                                              double floor) {
  const ForwardResult fr = forward(f.spec, f.params, f.image);
  const DetectionLoss dl = detection_loss_with_grad(f.targets, fr.preds, kDefaultMiningRatio, subset);
  const GradientSet analytic = backward(f.spec, f.params, fr.cache, dl.grad);
  const ParamLoss loss = [&](const ToyDetectorParams& p) {
    return detection_loss(f.targets, forward(f.spec, p, f.image).preds, kDefaultMiningRatio, subset).total;
  };
  return compare_gradients(f.params, analytic, loss, h, floor);
}

GradientCheckReport check_item_gradients(const DetectorSpec& spec, const ToyDetectorParams& params,
                                         const std::vector<Pass>& passes, double mining_ratio, double h,
                                         double floor) {
  const ItemGradient analytic = item_gradient(spec, params, passes, mining_ratio);
  const ParamLoss loss = [&](const ToyDetectorParams& p) {
    double total = 0.0;
    for (const auto& pass : passes)
      total += detection_loss(pass.targets, forward(spec, p, pass.image).preds, mining_ratio, pass.subset).total;
    return total;
  };
  return compare_gradients(params, analytic.grad, loss, h, floor);
}

}  // namespace boxmix::oracle
