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
#include <optional>
#include <string>
#include <vector>

#include "boxmix/evaluation.hpp"

namespace boxmix {

inline constexpr const char* kReportSchema = "boxmix.eval_report";
inline constexpr int kReportVersion = 1;

struct ReportMetadata {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  /// Seconds since the epoch taken from SOURCE_DATE_EPOCH, or 0, so that
  /// reruns are byte-identical.
  std::int64_t timestamp = 0;
  std::vector<std::string> checkpoints;  // hex digests of the evaluated models
};

/// SOURCE_DATE_EPOCH if set and numeric, else 0.
std::int64_t report_timestamp();

/// mAP per noise level for one or two models. With two models the
/// difference row is models[1] - models[0] (mixup minus baseline).
struct NoiseSweepTable {
  std::vector<double> sigmas;
  std::vector<std::string> models;
  std::vector<std::vector<double>> map;  // [model][sigma]
  std::optional<std::vector<double>> difference;
};

struct PatchStudyRow {
  double iou_threshold = 0.5;
  int copies = 0;
  int patches = 0;                // per copy
  double patches_detected = 0.0;  // mean over copies
  double precision = 0.0;         // mean over copies where defined
  bool precision_defined = false;
  double recall = 0.0;
  double map = 0.0;
  int invisible_patches = 0;  // per copy
};

struct PatchStudyResult {
  std::vector<PatchStudyRow> rows;                 // one per IoU threshold
  std::vector<std::vector<PatchMetrics>> per_copy;  // [threshold][copy]
};

struct FlatteningRow {
  int class_id = 0;  // 0 = all classes merged
  std::string class_name;
  int level = 0;
  int images = 0;
  bool skipped = false;  // fewer than two images
  std::optional<double> baseline;
  std::optional<double> mixup;
  std::optional<double> difference;  // mixup - baseline
  bool degenerate = false;           // zero variance in either model
};

struct EvalReport {
  ReportMetadata meta;
  std::vector<std::string> class_names;
  int images = 0;
  /// False for reports that carry only study tables; voc and coco are then
  /// omitted from the output.
  bool detection_metrics = true;
  double voc_iou_threshold = 0.5;
  ApStyle voc_style = ApStyle::kElevenPoint;
  VocResult voc;
  CocoMetrics coco;
  std::optional<NoiseSweepTable> noise;
  std::optional<PatchStudyResult> patch;
  std::optional<std::vector<FlatteningRow>> flattening;
};

/// Pretty-printed JSON with a fixed key order; null for undefined values.
std::string report_to_json(const EvalReport& r);
void write_report(const std::filesystem::path& path, const EvalReport& r);

/// Flat CSV tables. Each starts with a `# schema=... config_digest=...
/// seed=...` comment line.
std::string metrics_csv(const EvalReport& r);
std::string noise_csv(const NoiseSweepTable& t, const ReportMetadata& meta);
std::string patch_csv(const PatchStudyResult& p, const ReportMetadata& meta);
std::string flattening_csv(const std::vector<FlatteningRow>& rows, const ReportMetadata& meta);

/// Writes `text` to `path`, creating parent directories; throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace boxmix
