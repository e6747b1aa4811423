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
#include "boxmix/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace boxmix {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<Box> clip_to_unit(const Box& b) {
  const double x1 = std::clamp(b.x1(), 0.0, 1.0);
  const double y1 = std::clamp(b.y1(), 0.0, 1.0);
  const double x2 = std::clamp(b.x2(), 0.0, 1.0);
  const double y2 = std::clamp(b.y2(), 0.0, 1.0);
  if (x2 <= x1 || y2 <= y1) return std::nullopt;
  return Box::from_corners(x1, y1, x2, y2);
}

Offset encode_offsets(const Box& anchor, const Box& gt, OffsetVariances v) {
  return {(gt.cx - anchor.cx) / (v.center * anchor.w),
          (gt.cy - anchor.cy) / (v.center * anchor.h),
          std::log(gt.w / anchor.w) / v.size,
          std::log(gt.h / anchor.h) / v.size};
}

Box decode_offsets(const Box& anchor, const Offset& off, OffsetVariances v) {
  return Box{anchor.cx + off[0] * v.center * anchor.w,
             anchor.cy + off[1] * v.center * anchor.h,
             anchor.w * std::exp(off[2] * v.size),
             anchor.h * std::exp(off[3] * v.size)};
}

Box decode_offsets(const Box& anchor, const OffsetVector& off, OffsetVariances v) {
  if (!off) throw std::invalid_argument("decode_offsets: undefined offset");
  return decode_offsets(anchor, *off, v);
}

std::string AnchorGridSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    if (l) os << ';';
    os << lv.rows << 'x' << lv.cols << ':';
    for (std::size_t i = 0; i < lv.sizes.size(); ++i) os << (i ? "/" : "") << lv.sizes[i];
    os << ':';
    for (std::size_t i = 0; i < lv.ratios.size(); ++i) os << (i ? "/" : "") << lv.ratios[i];
  }
  return os.str();
}

AnchorGridSpec AnchorGridSpec::parse(const std::string& text) {
  AnchorGridSpec spec;
  for (const auto& level_text : detail::split(text, ';')) {
    const auto parts = detail::split(level_text, ':');
    if (parts.size() != 3) throw std::invalid_argument("anchor level '" + level_text + "': expected RxC:sizes:ratios");
    const auto dims = detail::split(parts[0], 'x');
    if (dims.size() != 2) throw std::invalid_argument("anchor level '" + level_text + "': bad grid");
    AnchorLevelSpec lv;
    lv.rows = static_cast<int>(detail::parse_int(dims[0]));
    lv.cols = static_cast<int>(detail::parse_int(dims[1]));
    for (const auto& s : detail::split(parts[1], '/')) lv.sizes.push_back(detail::parse_double(s));
    for (const auto& r : detail::split(parts[2], '/')) lv.ratios.push_back(detail::parse_double(r));
    spec.levels.push_back(std::move(lv));
  }
  return spec;
}

AnchorGridSpec toy_anchor_spec() {
  AnchorGridSpec spec;
  spec.levels = {
      {8, 8, {0.27, 0.36}, {1.0}},
      {4, 4, {0.46, 0.56}, {1.0}},
      {2, 2, {0.70, 0.85}, {1.0}},
  };
  return spec;
}

std::size_t AnchorSet::flat_index(const AnchorLocation& loc) const {
  const auto& lv = levels_.at(static_cast<std::size_t>(loc.level));
  if (loc.row < 0 || loc.row >= lv.rows || loc.col < 0 || loc.col >= lv.cols || loc.k < 0 || loc.k >= lv.k)
    throw std::out_of_range("AnchorSet::flat_index: location outside level");
  return lv.begin + (static_cast<std::size_t>(loc.row) * lv.cols + loc.col) * lv.k + loc.k;
}

int AnchorSet::level_of(std::size_t flat) const {
  for (std::size_t l = 0; l < levels_.size(); ++l)
    if (flat < levels_[l].end()) return static_cast<int>(l);
  throw std::out_of_range("AnchorSet::level_of: index past end");
}

AnchorLocation AnchorSet::locate(std::size_t flat) const {
  const int level = level_of(flat);
  const auto& lv = levels_[static_cast<std::size_t>(level)];
  std::size_t r = flat - lv.begin;
  AnchorLocation loc;
  loc.level = level;
  loc.k = static_cast<int>(r % lv.k);
  r /= lv.k;
  loc.col = static_cast<int>(r % lv.cols);
  loc.row = static_cast<int>(r / lv.cols);
  return loc;
}

AnchorSet build_anchor_set(const AnchorGridSpec& spec) {
  if (spec.levels.empty()) throw std::invalid_argument("build_anchor_set: empty spec");
  AnchorSet set;
  double prev_min_size = 0.0;
  for (const auto& lv : spec.levels) {
    if (lv.rows <= 0 || lv.cols <= 0) throw std::invalid_argument("build_anchor_set: non-positive grid");
    if (lv.sizes.empty() || lv.ratios.empty()) throw std::invalid_argument("build_anchor_set: level without sizes or ratios");
    for (double s : lv.sizes)
      if (!(s > 0.0)) throw std::invalid_argument("build_anchor_set: non-positive size");
    for (double r : lv.ratios)
      if (!(r > 0.0)) throw std::invalid_argument("build_anchor_set: non-positive ratio");
    const double min_size = *std::min_element(lv.sizes.begin(), lv.sizes.end());
    if (min_size <= prev_min_size) throw std::invalid_argument("build_anchor_set: levels must have increasing anchor sizes");
    prev_min_size = min_size;

    AnchorLevel level;
    level.rows = lv.rows;
    level.cols = lv.cols;
    level.k = lv.anchors_per_cell();
    level.begin = set.anchors_.size();
    for (int r = 0; r < lv.rows; ++r) {
      for (int c = 0; c < lv.cols; ++c) {
        const double cx = (c + 0.5) / lv.cols;
        const double cy = (r + 0.5) / lv.rows;
        for (double s : lv.sizes) {
          for (double ratio : lv.ratios) {
            const double sq = std::sqrt(ratio);
            set.anchors_.push_back(Box{cx, cy, s * sq, s / sq});
          }
        }
      }
    }
    set.levels_.push_back(level);
  }
  return set;
}

}  // namespace boxmix
