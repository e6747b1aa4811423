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
#include "boxmix/mixing.hpp"

#include <random>
#include <stdexcept>

namespace boxmix {

double sample_beta(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("sample_beta: parameters must be positive");
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  while (true) {
    const double x = ga(rng);
    const double y = gb(rng);
    // Both draws underflow to zero with negligible probability for small
    // shape parameters; redraw instead of returning NaN.
    if (x + y > 0.0) return x / (x + y);
  }
}

MixWeight sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_lambda: alpha must be positive");
  return MixWeight{sample_beta(alpha, alpha, rng), alpha};
}

ImageTensor mix_images(const ImageTensor& x, const ImageTensor& x2, const MixWeight& lam) {
  if (!x.same_shape(x2)) throw std::invalid_argument("mix_images: shape mismatch");
  ImageTensor out(x.height(), x.width(), x.channels());
  const double l = lam.lambda;
  const double m = 1.0 - l;
  auto& o = out.data();
  const auto& a = x.data();
  const auto& b = x2.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = l * a[i] + m * b[i];
  return out;
}

AnchorTargets box_mix(const AnchorTargets& t, const AnchorTargets& t2, const MixWeight& lam) {
  if (t.size() != t2.size()) throw std::invalid_argument("box_mix: anchor count mismatch");
  if (t.num_classes() != t2.num_classes()) throw std::invalid_argument("box_mix: class count mismatch");
  const double l = lam.lambda;
  const double m = 1.0 - l;
  const bool first_dominates = l > 0.5;
  AnchorTargets out(t.size(), t.num_classes());
  for (std::size_t a = 0; a < t.size(); ++a) {
    out.offset(a) = first_dominates ? t.offset(a) : t2.offset(a);
    auto row = out.label(a);
    const auto p = t.label(a);
    const auto q = t2.label(a);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = l * p[c] + m * q[c];
  }
  return out;
}

GroundTruth box_stack(const GroundTruth& y, const GroundTruth& y2) {
  GroundTruth out;
  out.reserve(y.size() + y2.size());
  out.insert(out.end(), y.begin(), y.end());
  out.insert(out.end(), y2.begin(), y2.end());
  return out;
}

}  // namespace boxmix
