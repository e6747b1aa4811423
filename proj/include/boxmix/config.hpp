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
#include <map>
#include <string>
#include <vector>

#include "boxmix/detector.hpp"
#include "boxmix/geometry.hpp"

namespace boxmix {

enum class TrainMode { kBaseline, kMixup, kBoxStack, kPerLevel };

std::string to_string(TrainMode m);
/// Throws ConfigError for an unknown name.
TrainMode parse_mode(const std::string& name);

/// Flat key=value run configuration. Keys and defaults are listed in
/// docs/formats.md; `alpha` and `batch_size` default per mode when absent.
struct RunConfig {
  std::string data_dir;
  std::string train_split = "train";
  std::string test_split = "test";
  std::string out_dir = "run";
  TrainMode mode = TrainMode::kBaseline;
  double alpha = 0.2;
  double tau = 0.5;
  double mining_ratio = 3.0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 5e-4;
  double lr_decay = 0.95;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
  double score_threshold = 0.3;
  double eval_score_threshold = 0.01;
  double nms_threshold = 0.45;
  int top_k = 200;
  int level = 0;  // target anchor level of the per-level mode
  bool augment = true;
  int max_train_images = 0;  // 0 = whole split
  int threads = 0;           // 0 = hardware concurrency; never affects results
  AnchorGridSpec anchors = toy_anchor_spec();

  /// Mode-dependent defaults: alpha 0.2 / 1.5 / 0.75, batch 32 / 16.
  static RunConfig defaults(TrainMode mode);

  /// Builds a config from key/value pairs. `mode` is applied first so that
  /// mode defaults can be overridden by explicit keys. Unknown keys and
  /// malformed values raise ConfigError; validate() is called.
  static RunConfig from_pairs(const std::map<std::string, std::string>& kv);

  /// Reads `key = value` lines; `#` starts a comment.
  static std::map<std::string, std::string> read_pairs(const std::filesystem::path& path);

  void validate() const;

  /// Canonical text, one key per line, sorted.
  std::string to_string() const;
  /// Digest over the keys that influence results (excludes out_dir and
  /// threads).
  std::uint64_t digest() const;
  std::string digest_hex() const;

  AdamHyper adam() const;

  /// The trainable detector for `num_classes` at `image_size`.
  DetectorSpec detector(int num_classes, int image_size) const;
};

/// Documented configuration keys, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace boxmix
