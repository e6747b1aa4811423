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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace boxmix {

/// Axis-aligned box in normalized image coordinates (center form).
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x1() const { return cx - 0.5 * w; }
  double y1() const { return cy - 0.5 * h; }
  double x2() const { return cx + 0.5 * w; }
  double y2() const { return cy + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  static Box from_corners(double x1, double y1, double x2, double y2) {
    return Box{0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Encoded regression target. An empty optional is the undefined offset
/// carried by unmatched anchors.
using Offset = std::array<double, 4>;
using OffsetVector = std::optional<Offset>;

/// Scaling applied to center deltas and log size ratios.
struct OffsetVariances {
  double center = 0.1;
  double size = 0.2;
};

double iou(const Box& a, const Box& b);

/// Clips a box to the unit square. Returns nullopt when nothing remains.
std::optional<Box> clip_to_unit(const Box& b);

Offset encode_offsets(const Box& anchor, const Box& gt, OffsetVariances v = {});

/// Throws std::invalid_argument on an undefined offset.
Box decode_offsets(const Box& anchor, const OffsetVector& off, OffsetVariances v = {});
Box decode_offsets(const Box& anchor, const Offset& off, OffsetVariances v = {});

/// One feature-map level of the anchor tiling. Every cell carries one
/// anchor per (size, ratio) pair, sizes outer, ratios inner; an anchor of
/// size s and ratio r has w = s*sqrt(r), h = s/sqrt(r).
struct AnchorLevelSpec {
  int rows = 0;
  int cols = 0;
  std::vector<double> sizes;
  std::vector<double> ratios;

  int anchors_per_cell() const { return static_cast<int>(sizes.size() * ratios.size()); }
};

struct AnchorGridSpec {
  std::vector<AnchorLevelSpec> levels;

  /// Canonical text form, used in config files and digests:
  /// "8x8:0.27/0.36:1;4x4:..." (sizes and ratios '/'-separated).
  std::string to_string() const;
  static AnchorGridSpec parse(const std::string& text);
};

/// 3 levels at 8x8, 4x4 and 2x2 with two square anchors per cell.
AnchorGridSpec toy_anchor_spec();

struct AnchorLocation {
  int level = 0;
  int row = 0;
  int col = 0;
  int k = 0;
  friend bool operator==(const AnchorLocation&, const AnchorLocation&) = default;
};

struct AnchorLevel {
  int rows = 0;
  int cols = 0;
  int k = 0;
  std::size_t begin = 0;  // first flat index of this level

  std::size_t count() const { return static_cast<std::size_t>(rows) * cols * k; }
  std::size_t end() const { return begin + count(); }
};

/// The flat anchor list. Flat order is level-major, then row, col, k; the
/// detector emits its predictions in the same order.
class AnchorSet {
 public:
  AnchorSet() = default;

  std::size_t size() const { return anchors_.size(); }
  const Box& operator[](std::size_t i) const { return anchors_[i]; }
  const std::vector<Box>& boxes() const { return anchors_; }
  const std::vector<AnchorLevel>& levels() const { return levels_; }
  int num_levels() const { return static_cast<int>(levels_.size()); }

  std::size_t flat_index(const AnchorLocation& loc) const;
  AnchorLocation locate(std::size_t flat) const;
  int level_of(std::size_t flat) const;

 private:
  friend AnchorSet build_anchor_set(const AnchorGridSpec& spec);
  std::vector<Box> anchors_;
  std::vector<AnchorLevel> levels_;
};

/// Throws std::invalid_argument for an empty spec, a non-positive grid,
/// size or ratio, or levels not sorted by increasing anchor size.
AnchorSet build_anchor_set(const AnchorGridSpec& spec);

}  // namespace boxmix
