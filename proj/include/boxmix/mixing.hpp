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

#include "boxmix/image.hpp"
#include "boxmix/matching.hpp"
#include "boxmix/rng.hpp"

namespace boxmix {

struct MixWeight {
  double lambda = 1.0;
  double alpha = 1.0;
};

/// Draws from Beta(alpha, beta) as X / (X + Y) with X ~ Gamma(alpha),
/// Y ~ Gamma(beta).
double sample_beta(double alpha, double beta, Rng& rng);

/// lambda ~ Beta(alpha, alpha). Throws std::invalid_argument if alpha <= 0.
MixWeight sample_lambda(double alpha, Rng& rng);

/// Element-wise lambda * x + (1 - lambda) * x2.
ImageTensor mix_images(const ImageTensor& x, const ImageTensor& x2, const MixWeight& lam);

/// Anchor-wise mixing of two target sets built over the same anchors.
///
/// Labels are interpolated, lambda * p + (1 - lambda) * p2. Offsets are not
/// interpolated: each anchor keeps the offset of the dominant image, which
/// is `t` when lambda > 1/2 and `t2` otherwise (including lambda == 1/2).
/// The result may pair an undefined offset with a label carrying object
/// mass.
AnchorTargets box_mix(const AnchorTargets& t, const AnchorTargets& t2, const MixWeight& lam);

/// Concatenation y ++ y2, the annotation used by the box-stacking baseline.
GroundTruth box_stack(const GroundTruth& y, const GroundTruth& y2);

}  // namespace boxmix
