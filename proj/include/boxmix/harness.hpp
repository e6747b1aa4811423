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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boxmix/config.hpp"
#include "boxmix/detector.hpp"
#include "boxmix/evaluation.hpp"
#include "boxmix/image.hpp"
#include "boxmix/matching.hpp"
#include "boxmix/report.hpp"
#include "boxmix/synthetic.hpp"

namespace boxmix {

/// A split decoded into tensors.
struct ImageSet {
  std::vector<ImageTensor> images;
  std::vector<GroundTruth> gts;
  std::vector<std::string> class_names;
  int image_size = 0;

  std::size_t size() const { return images.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// Loads root/split; `limit` > 0 keeps the first `limit` items.
ImageSet load_image_set(const std::filesystem::path& root, const std::string& split, int limit = 0);

/// One forward/backward pass of an item: loss restricted to `subset`
/// (empty = all anchors).
struct Pass {
  ImageTensor image;
  AnchorTargets targets;
  std::vector<bool> subset;
};

struct ItemGradient {
  LossBreakdown loss;  // summed over passes
  GradientSet grad;
};

ItemGradient item_gradient(const DetectorSpec& spec, const ToyDetectorParams& params, const std::vector<Pass>& passes,
                           double mining_ratio);

/// Anchor mask selecting the levels flagged in `levels`.
std::vector<bool> level_mask(const AnchorSet& anchors, const std::vector<bool>& levels);

struct TrainHooks {
  /// Forces the mixing weight in the mixing modes (λ = 1 reproduces the
  /// baseline exactly).
  std::optional<double> pin_lambda;
  /// Per-level mode: overrides the set of levels trained on the mixed pass.
  std::optional<std::vector<bool>> mixed_levels;
  /// Write the run directory (config, losses, checkpoints, report).
  bool write_outputs = true;
  /// Evaluate on the test split after training when it exists.
  bool evaluate = true;
  std::function<void(int epoch, double total_loss)> on_epoch;
};

/// Builds the passes of the item in slot `slot` of a batch, whose dataset
/// indices are `batch`; `position` is the item's position in the epoch.
/// Mixing modes pair the item with a uniformly drawn other slot of the same
/// batch (itself for a batch of one). Exposed for tests.
std::vector<Pass> make_item_passes(const RunConfig& cfg, const ImageSet& data, const AnchorSet& anchors, int epoch,
                                   std::size_t position, std::span<const std::size_t> batch, std::size_t slot,
                                   const TrainHooks& hooks = {});
/// Epoch order: a Fisher-Yates shuffle drawn from the per-epoch stream.
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n);

struct EpochLoss {
  int epoch = 0;
  double lr = 0.0;
  double cls = 0.0;  // means over the epoch's batches
  double reg = 0.0;
  double total = 0.0;
  std::vector<double> batch_totals;
};

struct RunRecord {
  RunConfig config;
  std::string config_digest;
  DetectorSpec spec;
  ToyDetectorParams params;
  std::vector<EpochLoss> losses;
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint;  // empty when nothing was written
  std::string checkpoint_digest;
  std::optional<EvalReport> report;
};

/// Trains per cfg.mode on cfg.data_dir / cfg.train_split.
RunRecord train(const RunConfig& cfg, const TrainHooks& hooks = {});
/// Same on an in-memory training set; `test` may be null.
RunRecord train(const RunConfig& cfg, const ImageSet& data, const ImageSet* test, const TrainHooks& hooks = {});
/// train() in per-level mode; throws ConfigError for an invalid level.
RunRecord train_perlevel(RunConfig cfg, const TrainHooks& hooks = {});

struct EvalOptions {
  double score_threshold = 0.01;
  double nms_threshold = 0.45;
  int top_k = 200;
  int threads = 1;

  static EvalOptions for_map(const RunConfig& cfg);      // eval_score_threshold
  static EvalOptions for_counting(const RunConfig& cfg); // score_threshold
};

std::vector<ImageDetections> detect(const DetectorSpec& spec, const ToyDetectorParams& params,
                                    const std::vector<ImageTensor>& images, const EvalOptions& opt);

EvalReport evaluate_model(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                          const EvalOptions& opt);

inline const std::vector<double>& default_noise_sigmas() {
  static const std::vector<double> s = {0.0, 0.1, 0.2, 0.4};
  return s;
}

/// VOC mAP at each sigma. Noise for (sigma index s, image i) comes from its
/// own stream of `seed`.
std::vector<double> noise_sweep(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                                const std::vector<double>& sigmas, std::uint64_t seed, const EvalOptions& opt);

/// Table with one row per model; two models add a difference row
/// (second minus first).
NoiseSweepTable noise_table(const std::vector<double>& sigmas, const std::vector<std::string>& names,
                            const std::vector<std::vector<double>>& maps);

/// One patched copy of `data`: for each image a bank patch is drawn and
/// transplanted. Targets are returned with empty detections.
struct PatchedCopy {
  std::vector<ImageTensor> images;
  std::vector<PatchImage> targets;
};
PatchedCopy make_patched_copy(const ImageSet& data, const std::vector<Patch>& bank, std::uint64_t seed, int copy);

inline constexpr double kPatchMinScale = 0.1;
inline constexpr double kPatchMaxScale = 0.4;

/// Runs patch_metrics over `copies` patched copies at each IoU threshold
/// and averages. Detections use opt (typically for_counting).
PatchStudyResult patch_study(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                             const std::vector<Patch>& bank, int copies, std::uint64_t seed, const EvalOptions& opt,
                             const std::vector<double>& iou_thresholds = {0.5, 0.75});

/// Averages per-copy metrics (exposed for tests of the reduction).
PatchStudyRow average_patch_metrics(const std::vector<PatchMetrics>& per_copy, double iou_threshold);

/// Logits of every anchor of `level`, flattened in anchor order.
std::vector<double> level_logits(const PredictionField& preds, const AnchorSet& anchors, std::size_t level);

/// Per (dominant class, level) and merged-per-level PCA ratios for both
/// models and their difference (mixup - baseline).
std::vector<FlatteningRow> flattening_study(const DetectorSpec& baseline_spec, const ToyDetectorParams& baseline,
                                            const DetectorSpec& mixup_spec, const ToyDetectorParams& mixup,
                                            const ImageSet& data, int threads = 1);

/// fnv1a64 of a file's bytes as 16 hex digits; throws IoError.
std::string file_digest(const std::filesystem::path& path);

}  // namespace boxmix
