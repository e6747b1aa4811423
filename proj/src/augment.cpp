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
#include "boxmix/augment.hpp"

#include <algorithm>
#include <cmath>

namespace boxmix {

Sample hflip(const Sample& s) {
  Sample out{ImageTensor(s.image.height(), s.image.width(), s.image.channels()), s.gt};
  const int w = s.image.width();
  for (int y = 0; y < s.image.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < s.image.channels(); ++c) out.image.at(y, x, c) = s.image.at(y, w - 1 - x, c);
  for (auto& g : out.gt) g.box.cx = 1.0 - g.box.cx;
  return out;
}

ImageTensor color_jitter(const ImageTensor& img, const AugmentOptions& opt, Rng& rng) {
  const double brightness = uniform(rng, 1.0 - opt.brightness, 1.0 + opt.brightness);
  const double contrast = uniform(rng, 1.0 - opt.contrast, 1.0 + opt.contrast);
  double gain[3];
  for (double& g : gain) g = uniform(rng, 1.0 - opt.channel_gain, 1.0 + opt.channel_gain);

  double mean = 0.0;
  for (double v : img.data()) mean += v;
  mean /= static_cast<double>(img.size());

  ImageTensor out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const double v = ((img.at(y, x, c) - mean) * contrast + mean) * brightness * gain[c % 3];
        out.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
  return out;
}

Sample random_crop(const Sample& s, const AugmentOptions& opt, Rng& rng) {
  const int W = s.image.width();
  const int H = s.image.height();
  constexpr int kTries = 10;
  for (int attempt = 0; attempt < kTries; ++attempt) {
    const int cw = std::max(1, static_cast<int>(std::lround(uniform(rng, opt.min_crop, 1.0) * W)));
    const int ch = std::max(1, static_cast<int>(std::lround(uniform(rng, opt.min_crop, 1.0) * H)));
    const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(W - cw + 1)));
    const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(H - ch + 1)));
    const double nx0 = static_cast<double>(x0) / W, ny0 = static_cast<double>(y0) / H;
    const double nx1 = static_cast<double>(x0 + cw) / W, ny1 = static_cast<double>(y0 + ch) / H;

    GroundTruth kept;
    bool ok = true;
    for (const auto& g : s.gt) {
      if (g.box.cx < nx0 || g.box.cx >= nx1 || g.box.cy < ny0 || g.box.cy >= ny1) continue;
      const double ix1 = std::max(g.box.x1(), nx0), iy1 = std::max(g.box.y1(), ny0);
      const double ix2 = std::min(g.box.x2(), nx1), iy2 = std::min(g.box.y2(), ny1);
      if ((ix2 - ix1) * (iy2 - iy1) < opt.min_kept_area * g.box.area()) {
        ok = false;
        break;
      }
      const double sx = static_cast<double>(W) / cw, sy = static_cast<double>(H) / ch;
      kept.push_back(LabeledBox{Box::from_corners((ix1 - nx0) * sx, (iy1 - ny0) * sy, (ix2 - nx0) * sx, (iy2 - ny0) * sy),
                                g.class_id});
    }
    if (!ok || (kept.empty() && !s.gt.empty())) continue;

    Sample out{ImageTensor(H, W, s.image.channels()), std::move(kept)};
    for (int y = 0; y < H; ++y) {
      const int sy = y0 + std::min(ch - 1, static_cast<int>((y + 0.5) * ch / H));
      for (int x = 0; x < W; ++x) {
        const int sx = x0 + std::min(cw - 1, static_cast<int>((x + 0.5) * cw / W));
        for (int c = 0; c < s.image.channels(); ++c) out.image.at(y, x, c) = s.image.at(sy, sx, c);
      }
    }
    return out;
  }
  return s;
}

Sample augment(const Sample& s, const AugmentOptions& opt, Rng& rng) {
  Sample out = uniform01(rng) < opt.flip_prob ? hflip(s) : s;
  out.image = color_jitter(out.image, opt, rng);
  if (uniform01(rng) < opt.crop_prob) out = random_crop(out, opt, rng);
  return out;
}

}  // namespace boxmix
