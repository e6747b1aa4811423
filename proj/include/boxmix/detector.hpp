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
#include <filesystem>
#include <string>
#include <vector>

#include "boxmix/geometry.hpp"
#include "boxmix/image.hpp"
#include "boxmix/loss.hpp"

namespace boxmix {

/// Dense row-major array.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Architecture of the toy multiscale detector.
///
/// A patchify stem (stem_patch x stem_patch convolution with the same
/// stride) feeds a trunk of stride-2 3x3 convolution + ReLU blocks. Block i
/// produces the feature map of anchor level i, and each level has its own
/// head convolution emitting K*(C+1) logits followed by K*4 offsets per
/// cell. The anchor grid of level i must match the spatial size of block i.
struct DetectorSpec {
  int input_size = 64;
  int input_channels = 3;
  int stem_patch = 4;
  int stem_channels = 8;
  std::vector<int> trunk_channels = {16, 32, 64};
  int num_classes = 3;
  int head_kernel = 3;
  AnchorGridSpec anchors = toy_anchor_spec();

  /// Spatial size of each trunk block's output.
  std::vector<int> feature_sizes() const;

  /// Throws std::invalid_argument if the pieces are inconsistent.
  void validate() const;

  std::string to_string() const;
  static DetectorSpec parse(const std::string& text);
  std::uint64_t digest() const;

  /// The 64x64 default used for training runs.
  static DetectorSpec toy();
  /// 8x8 input with a 1x1 stem and 4x4/2x2/1x1 levels, sized for
  /// finite-difference gradient checks.
  static DetectorSpec tiny();
};

struct Conv2d {
  Tensor weight;  // [out, in, kh, kw]
  Tensor bias;    // [out]
  int stride = 1;
  int pad = 0;

  int out_channels() const { return weight.shape[0]; }
  int in_channels() const { return weight.shape[1]; }
  int kernel() const { return weight.shape[2]; }
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

/// Weights of the detector. Layer order: stem, trunk blocks, heads.
/// A gradient set uses the same type.
struct ToyDetectorParams {
  std::vector<Conv2d> layers;
  /// Bumped by every optimizer update; forward caches record it so that
  /// backward can reject a cache computed with different weights.
  std::uint64_t generation = 0;

  std::size_t num_trunk() const { return (layers.size() - 1) / 2; }
  const Conv2d& stem() const { return layers[0]; }
  const Conv2d& trunk(std::size_t i) const { return layers[1 + i]; }
  const Conv2d& head(std::size_t i) const { return layers[1 + num_trunk() + i]; }
  std::size_t num_parameters() const;

  /// Same shapes, all zeros.
  ToyDetectorParams zeros_like() const;
  void add_scaled(const ToyDetectorParams& other, double scale);

  friend bool operator==(const ToyDetectorParams& a, const ToyDetectorParams& b) { return a.layers == b.layers; }
};

using GradientSet = ToyDetectorParams;

/// Fan-in scaled normal initialization, N(0, 2 / fan_in); zero biases.
ToyDetectorParams init_params(const DetectorSpec& spec, std::uint64_t seed);

/// Zero weights and biases with the spec's shapes.
ToyDetectorParams zero_params(const DetectorSpec& spec);

/// Activations retained for the backward pass.
struct ForwardCache {
  const ToyDetectorParams* params = nullptr;
  std::uint64_t generation = 0;
  Tensor input;                       // [C, H, W]
  std::vector<Tensor> trunk_outputs;  // post-ReLU; [0] is the stem
};

struct ForwardResult {
  PredictionField preds;
  ForwardCache cache;
};

/// Throws std::invalid_argument on an image whose shape differs from
/// the spec's input.
ForwardResult forward(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageTensor& image);

/// Exact gradient of any scalar loss given its gradient with respect to
/// the prediction field. Throws std::invalid_argument on a stale cache.
GradientSet backward(const DetectorSpec& spec, const ToyDetectorParams& params, const ForwardCache& cache,
                     const PredictionField& grad_out);

struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // decoupled
};

struct AdamState {
  ToyDetectorParams m;
  ToyDetectorParams v;
  std::int64_t step = 0;
};

AdamState make_adam_state(const ToyDetectorParams& params);

/// One bias-corrected Adam update with decoupled weight decay, using
/// hyper.lr as the current learning rate.
void adam_step(ToyDetectorParams& params, const GradientSet& grads, AdamState& state, const AdamHyper& hyper);

/// Binary checkpoint (see docs/formats.md). Throws IoError on a failed
/// write, or on a missing, truncated or corrupted file when loading.
/// `meta` is free text stored alongside the weights (config digest, seed).
void save_checkpoint(const std::filesystem::path& path, const DetectorSpec& spec, const ToyDetectorParams& params,
                     const std::string& meta = {});

struct Checkpoint {
  DetectorSpec spec;
  ToyDetectorParams params;
  std::string meta;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace boxmix
