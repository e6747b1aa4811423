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

struct AugmentOptions {
  double flip_prob = 0.5;
  double brightness = 0.2;  // multiplicative factor drawn from [1 - b, 1 + b]
  double contrast = 0.2;    // around the image mean
  double channel_gain = 0.1;
  double crop_prob = 0.5;
  double min_crop = 0.6;    // crop side as a fraction of the image side
  double min_kept_area = 0.5;
};

struct Sample {
  ImageTensor image;
  GroundTruth gt;
};

Sample hflip(const Sample& s);

ImageTensor color_jitter(const ImageTensor& img, const AugmentOptions& opt, Rng& rng);

/// Integer-pixel crop resized back to the input size. Boxes whose centers
/// leave the crop are dropped; every kept box must retain at least
/// opt.min_kept_area of its area, and at least one box must survive. When
/// no valid window is found within a few draws the sample is returned
/// unchanged.
Sample random_crop(const Sample& s, const AugmentOptions& opt, Rng& rng);

/// Flip, then color jitter, then crop.
Sample augment(const Sample& s, const AugmentOptions& opt, Rng& rng);

}  // namespace boxmix
