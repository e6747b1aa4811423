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
#include "boxmix/detector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "boxmix/rng.hpp"
#include "text_util.hpp"

namespace boxmix {

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                        [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  data.assign(n, fill);
}

// ---------------------------------------------------------------------------
// DetectorSpec

std::vector<int> DetectorSpec::feature_sizes() const {
  std::vector<int> sizes;
  int s = input_size / stem_patch;
  for (std::size_t i = 0; i < trunk_channels.size(); ++i) {
    s = (s - 1) / 2 + 1;  // 3x3, stride 2, pad 1
    sizes.push_back(s);
  }
  return sizes;
}

void DetectorSpec::validate() const {
  if (input_size <= 0 || input_channels <= 0 || stem_patch <= 0 || stem_channels <= 0)
    throw std::invalid_argument("detector spec: non-positive dimension");
  if (input_size % stem_patch != 0) throw std::invalid_argument("detector spec: stem patch must divide the input size");
  if (num_classes < 1) throw std::invalid_argument("detector spec: need at least one object class");
  if (head_kernel <= 0 || head_kernel % 2 == 0) throw std::invalid_argument("detector spec: head kernel must be odd");
  if (trunk_channels.empty()) throw std::invalid_argument("detector spec: empty trunk");
  for (int c : trunk_channels)
    if (c <= 0) throw std::invalid_argument("detector spec: non-positive channel count");
  if (anchors.levels.size() != trunk_channels.size())
    throw std::invalid_argument("detector spec: one anchor level per trunk block required");
  const auto sizes = feature_sizes();
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const auto& lv = anchors.levels[l];
    if (lv.rows != sizes[l] || lv.cols != sizes[l])
      throw std::invalid_argument("detector spec: anchor grid of level " + std::to_string(l) + " must be " +
                                  std::to_string(sizes[l]) + "x" + std::to_string(sizes[l]));
  }
  (void)build_anchor_set(anchors);
}

std::string DetectorSpec::to_string() const {
  std::ostringstream os;
  os << "input=" << input_size << ";channels=" << input_channels << ";stem_patch=" << stem_patch
     << ";stem_channels=" << stem_channels << ";trunk=";
  for (std::size_t i = 0; i < trunk_channels.size(); ++i) os << (i ? "," : "") << trunk_channels[i];
  os << ";classes=" << num_classes << ";head_kernel=" << head_kernel << ";anchors=" << anchors.to_string();
  return os.str();
}

DetectorSpec DetectorSpec::parse(const std::string& text) {
  DetectorSpec spec;
  // The anchors value contains ';' itself, so it is always last.
  const auto anchors_pos = text.find(";anchors=");
  if (anchors_pos == std::string::npos) throw std::invalid_argument("detector spec: missing anchors");
  spec.anchors = AnchorGridSpec::parse(text.substr(anchors_pos + 9));
  for (const auto& kv : detail::split(text.substr(0, anchors_pos), ';')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("detector spec: bad field '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "input") spec.input_size = static_cast<int>(detail::parse_int(val));
    else if (key == "channels") spec.input_channels = static_cast<int>(detail::parse_int(val));
    else if (key == "stem_patch") spec.stem_patch = static_cast<int>(detail::parse_int(val));
    else if (key == "stem_channels") spec.stem_channels = static_cast<int>(detail::parse_int(val));
    else if (key == "classes") spec.num_classes = static_cast<int>(detail::parse_int(val));
    else if (key == "head_kernel") spec.head_kernel = static_cast<int>(detail::parse_int(val));
    else if (key == "trunk") {
      spec.trunk_channels.clear();
      for (const auto& c : detail::split(val, ',')) spec.trunk_channels.push_back(static_cast<int>(detail::parse_int(c)));
    } else {
      throw std::invalid_argument("detector spec: unknown field '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

std::uint64_t DetectorSpec::digest() const { return fnv1a64(to_string()); }

DetectorSpec DetectorSpec::toy() { return DetectorSpec{}; }

DetectorSpec DetectorSpec::tiny() {
  DetectorSpec spec;
  spec.input_size = 8;
  spec.stem_patch = 1;
  spec.stem_channels = 4;
  spec.trunk_channels = {4, 6, 8};
  spec.anchors.levels = {
      {4, 4, {0.3, 0.4}, {1.0}},
      {2, 2, {0.5, 0.6}, {1.0}},
      {1, 1, {0.8}, {1.0, 2.0}},
  };
  return spec;
}

// ---------------------------------------------------------------------------
// Parameters

std::size_t ToyDetectorParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.numel() + l.bias.numel();
  return n;
}

ToyDetectorParams ToyDetectorParams::zeros_like() const {
  ToyDetectorParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) z.layers.push_back(Conv2d{Tensor(l.weight.shape), Tensor(l.bias.shape), l.stride, l.pad});
  return z;
}

void ToyDetectorParams::add_scaled(const ToyDetectorParams& other, double scale) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].weight.data;
    const auto& ow = other.layers[i].weight.data;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += scale * ow[j];
    auto& b = layers[i].bias.data;
    const auto& ob = other.layers[i].bias.data;
    for (std::size_t j = 0; j < b.size(); ++j) b[j] += scale * ob[j];
  }
}

ToyDetectorParams zero_params(const DetectorSpec& spec) {
  spec.validate();
  ToyDetectorParams p;
  auto conv = [](int out, int in, int k, int stride, int pad) {
    return Conv2d{Tensor({out, in, k, k}), Tensor({out}), stride, pad};
  };
  p.layers.push_back(conv(spec.stem_channels, spec.input_channels, spec.stem_patch, spec.stem_patch, 0));
  int in = spec.stem_channels;
  for (int c : spec.trunk_channels) {
    p.layers.push_back(conv(c, in, 3, 2, 1));
    in = c;
  }
  for (std::size_t l = 0; l < spec.trunk_channels.size(); ++l) {
    const int k = spec.anchors.levels[l].anchors_per_cell();
    p.layers.push_back(conv(k * (spec.num_classes + 1 + 4), spec.trunk_channels[l], spec.head_kernel, 1,
                            spec.head_kernel / 2));
  }
  return p;
}

ToyDetectorParams init_params(const DetectorSpec& spec, std::uint64_t seed) {
  ToyDetectorParams p = zero_params(spec);
  Rng rng = make_rng(seed, {0x1417});
  for (auto& l : p.layers) {
    const int fan_in = l.in_channels() * l.kernel() * l.kernel();
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (double& w : l.weight.data) w = dist(rng);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Convolution on [C, H, W] tensors

namespace {

Tensor conv_forward(const Conv2d& conv, const Tensor& in) {
  const int cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const int cout = conv.out_channels(), k = conv.kernel(), s = conv.stride, p = conv.pad;
  const int oh = (h + 2 * p - k) / s + 1;
  const int ow = (w + 2 * p - k) / s + 1;
  Tensor out({cout, oh, ow});
  const double* wt = conv.weight.data.data();
  const double* x = in.data.data();
  double* y = out.data.data();
  for (int o = 0; o < cout; ++o) {
    double* yo = y + static_cast<std::size_t>(o) * oh * ow;
    std::fill(yo, yo + oh * ow, conv.bias.data[static_cast<std::size_t>(o)]);
    for (int i = 0; i < cin; ++i) {
      const double* xi = x + static_cast<std::size_t>(i) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = wt[((static_cast<std::size_t>(o) * cin + i) * k + ky) * k + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= h) continue;
            const double* row = xi + static_cast<std::size_t>(iy) * w;
            double* yrow = yo + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s + kx - p;
              if (ix < 0 || ix >= w) continue;
              yrow[ox] += wv * row[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates weight/bias gradients into `grad` and returns d loss / d input
// (skipped when `want_input_grad` is false).
Tensor conv_backward(const Conv2d& conv, const Tensor& in, const Tensor& dout, Conv2d& grad, bool want_input_grad) {
  const int cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const int cout = conv.out_channels(), k = conv.kernel(), s = conv.stride, p = conv.pad;
  const int oh = dout.shape[1], ow = dout.shape[2];
  Tensor din;
  if (want_input_grad) din = Tensor({cin, h, w});
  const double* wt = conv.weight.data.data();
  double* dw = grad.weight.data.data();
  const double* x = in.data.data();
  const double* dy = dout.data.data();
  for (int o = 0; o < cout; ++o) {
    const double* dyo = dy + static_cast<std::size_t>(o) * oh * ow;
    double db = 0.0;
    for (int j = 0; j < oh * ow; ++j) db += dyo[j];
    grad.bias.data[static_cast<std::size_t>(o)] += db;
    for (int i = 0; i < cin; ++i) {
      const double* xi = x + static_cast<std::size_t>(i) * h * w;
      double* dxi = want_input_grad ? din.data.data() + static_cast<std::size_t>(i) * h * w : nullptr;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * cin + i) * k + ky) * k + kx;
          const double wv = wt[widx];
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s + ky - p;
            if (iy < 0 || iy >= h) continue;
            const double* row = xi + static_cast<std::size_t>(iy) * w;
            const double* dyrow = dyo + static_cast<std::size_t>(oy) * ow;
            double* dxrow = dxi ? dxi + static_cast<std::size_t>(iy) * w : nullptr;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s + kx - p;
              if (ix < 0 || ix >= w) continue;
              acc += dyrow[ox] * row[ix];
              if (dxrow) dxrow[ix] += wv * dyrow[ox];
            }
          }
          dw[widx] += acc;
        }
      }
    }
  }
  return din;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

// Zeroes gradient entries where the post-ReLU activation is not positive.
void relu_backward_inplace(Tensor& grad, const Tensor& activation) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(activation.data[i] > 0.0)) grad.data[i] = 0.0;
}

Tensor image_to_chw(const ImageTensor& img) {
  Tensor t({img.channels(), img.height(), img.width()});
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        t.data[(static_cast<std::size_t>(c) * img.height() + y) * img.width() + x] = img.at(y, x, c);
  return t;
}

}  // namespace

ForwardResult forward(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageTensor& image) {
  if (image.height() != spec.input_size || image.width() != spec.input_size ||
      image.channels() != spec.input_channels)
    throw std::invalid_argument("forward: image shape does not match the detector input");
  const std::size_t n_levels = spec.trunk_channels.size();
  if (params.layers.size() != 1 + 2 * n_levels) throw std::invalid_argument("forward: parameters do not match spec");

  ForwardResult res;
  res.cache.params = &params;
  res.cache.generation = params.generation;
  res.cache.input = image_to_chw(image);

  Tensor feat = conv_forward(params.stem(), res.cache.input);
  relu_inplace(feat);
  res.cache.trunk_outputs.push_back(feat);
  for (std::size_t l = 0; l < n_levels; ++l) {
    feat = conv_forward(params.trunk(l), feat);
    relu_inplace(feat);
    res.cache.trunk_outputs.push_back(feat);
  }

  const AnchorSet anchors = build_anchor_set(spec.anchors);
  const int width = spec.num_classes + 1;
  res.preds = PredictionField(anchors.size(), spec.num_classes);
  for (std::size_t l = 0; l < n_levels; ++l) {
    const Tensor out = conv_forward(params.head(l), res.cache.trunk_outputs[l + 1]);
    const auto& lv = anchors.levels()[l];
    const int hw = lv.rows * lv.cols;
    for (int r = 0; r < lv.rows; ++r) {
      for (int c = 0; c < lv.cols; ++c) {
        const int cell = r * lv.cols + c;
        for (int k = 0; k < lv.k; ++k) {
          const std::size_t a = lv.begin + static_cast<std::size_t>(cell) * lv.k + k;
          auto logits = res.preds.logits(a);
          for (int j = 0; j < width; ++j)
            logits[static_cast<std::size_t>(j)] = out.data[static_cast<std::size_t>(k * width + j) * hw + cell];
          auto offs = res.preds.offsets(a);
          for (int j = 0; j < 4; ++j)
            offs[static_cast<std::size_t>(j)] = out.data[static_cast<std::size_t>(lv.k * width + k * 4 + j) * hw + cell];
        }
      }
    }
  }
  return res;
}

GradientSet backward(const DetectorSpec& spec, const ToyDetectorParams& params, const ForwardCache& cache,
                     const PredictionField& grad_out) {
  if (cache.params != &params || cache.generation != params.generation)
    throw std::invalid_argument("backward: forward cache is stale or belongs to other parameters");
  const std::size_t n_levels = spec.trunk_channels.size();
  if (cache.trunk_outputs.size() != n_levels + 1) throw std::invalid_argument("backward: malformed cache");
  const AnchorSet anchors = build_anchor_set(spec.anchors);
  if (grad_out.size() != anchors.size()) throw std::invalid_argument("backward: gradient size mismatch");

  GradientSet grads = params.zeros_like();
  const int width = spec.num_classes + 1;

  // Heads: scatter the per-anchor gradient back into [K*(C+1+4), H, W].
  std::vector<Tensor> dfeat(n_levels + 1);
  for (std::size_t l = 0; l < n_levels; ++l) {
    const auto& lv = anchors.levels()[l];
    const int hw = lv.rows * lv.cols;
    Tensor dout({params.head(l).out_channels(), lv.rows, lv.cols});
    for (int cell = 0; cell < hw; ++cell) {
      for (int k = 0; k < lv.k; ++k) {
        const std::size_t a = lv.begin + static_cast<std::size_t>(cell) * lv.k + k;
        const auto gl = grad_out.logits(a);
        for (int j = 0; j < width; ++j)
          dout.data[static_cast<std::size_t>(k * width + j) * hw + cell] = gl[static_cast<std::size_t>(j)];
        const auto go = grad_out.offsets(a);
        for (int j = 0; j < 4; ++j)
          dout.data[static_cast<std::size_t>(lv.k * width + k * 4 + j) * hw + cell] = go[static_cast<std::size_t>(j)];
      }
    }
    dfeat[l + 1] = conv_backward(params.head(l), cache.trunk_outputs[l + 1], dout, grads.layers[1 + n_levels + l], true);
  }

  // Trunk, deepest block first; block l's output gradient collects its own
  // head's contribution plus the gradient flowing back from block l+1.
  for (std::size_t l = n_levels; l-- > 0;) {
    Tensor& d = dfeat[l + 1];
    relu_backward_inplace(d, cache.trunk_outputs[l + 1]);
    Tensor din = conv_backward(params.trunk(l), cache.trunk_outputs[l], d, grads.layers[1 + l], true);
    if (dfeat[l].data.empty()) {
      dfeat[l] = std::move(din);
    } else {
      for (std::size_t i = 0; i < din.data.size(); ++i) dfeat[l].data[i] += din.data[i];
    }
  }
  relu_backward_inplace(dfeat[0], cache.trunk_outputs[0]);
  conv_backward(params.stem(), cache.input, dfeat[0], grads.layers[0], false);
  return grads;
}

// ---------------------------------------------------------------------------
// Adam

AdamState make_adam_state(const ToyDetectorParams& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ToyDetectorParams& params, const GradientSet& grads, AdamState& state, const AdamHyper& hyper) {
  if (grads.layers.size() != params.layers.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= hyper.lr * (mhat / (std::sqrt(vhat) + hyper.eps) + hyper.weight_decay * p[i]);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight.data, grads.layers[l].weight.data, state.m.layers[l].weight.data,
           state.v.layers[l].weight.data);
    update(params.layers[l].bias.data, grads.layers[l].bias.data, state.m.layers[l].bias.data,
           state.v.layers[l].bias.data);
  }
  ++params.generation;
}

}  // namespace boxmix
