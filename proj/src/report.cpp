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
#include "boxmix/report.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "boxmix/error.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace boxmix {

using Json = nlohmann::ordered_json;

std::int64_t report_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env) return 0;
  try {
    return detail::parse_int(env);
  } catch (const std::invalid_argument&) {
    return 0;
  }
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string csv_opt(const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); }

Json meta_json(const ReportMetadata& m) {
  Json j;
  j["command"] = m.command;
  j["config_digest"] = m.config_digest;
  j["seed"] = m.seed;
  j["timestamp"] = m.timestamp;
  j["checkpoints"] = m.checkpoints;
  return j;
}

std::string csv_header(const ReportMetadata& m, const std::string& table) {
  return "# schema=" + std::string(kReportSchema) + "." + table + " version=" + std::to_string(kReportVersion) +
         " config_digest=" + m.config_digest + " seed=" + std::to_string(m.seed) + "\n";
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["version"] = kReportVersion;
  j["metadata"] = meta_json(r.meta);
  j["images"] = r.images;

  if (r.detection_metrics) {
    Json voc;
    voc["iou_threshold"] = r.voc_iou_threshold;
    voc["interpolation"] = r.voc_style == ApStyle::kElevenPoint ? "11point" : "allpoint";
    Json per_class = Json::object();
    for (std::size_t c = 0; c < r.voc.per_class_ap.size(); ++c) {
      const std::string name = c < r.class_names.size() ? r.class_names[c] : std::to_string(c + 1);
      per_class[name] = opt(r.voc.per_class_ap[c]);
    }
    voc["per_class_ap"] = per_class;
    voc["map"] = r.voc.map;
    j["voc"] = voc;

    const auto& m = r.coco;
    Json coco;
    coco["ap"] = opt(m.ap);
    coco["ap50"] = opt(m.ap50);
    coco["ap75"] = opt(m.ap75);
    coco["ap_small"] = opt(m.ap_small);
    coco["ap_medium"] = opt(m.ap_medium);
    coco["ap_large"] = opt(m.ap_large);
    coco["ar1"] = opt(m.ar1);
    coco["ar10"] = opt(m.ar10);
    coco["ar100"] = opt(m.ar100);
    coco["ar_small"] = opt(m.ar_small);
    coco["ar_medium"] = opt(m.ar_medium);
    coco["ar_large"] = opt(m.ar_large);
    j["coco"] = coco;
  }

  if (r.noise) {
    Json n;
    n["sigmas"] = r.noise->sigmas;
    Json models = Json::array();
    for (std::size_t i = 0; i < r.noise->models.size(); ++i)
      models.push_back(Json{{"name", r.noise->models[i]}, {"map", r.noise->map[i]}});
    n["models"] = models;
    n["difference"] = r.noise->difference ? Json(*r.noise->difference) : Json(nullptr);
    j["noise_sweep"] = n;
  }
  if (r.patch) {
    Json rows = Json::array();
    for (const auto& row : r.patch->rows) {
      Json x;
      x["iou_threshold"] = row.iou_threshold;
      x["copies"] = row.copies;
      x["patches"] = row.patches;
      x["patches_detected"] = row.patches_detected;
      x["precision"] = row.precision;
      x["precision_defined"] = row.precision_defined;
      x["recall"] = row.recall;
      x["map"] = row.map;
      x["invisible_patches"] = row.invisible_patches;
      rows.push_back(x);
    }
    j["patch_study"] = Json{{"rows", rows}};
  }
  if (r.flattening) {
    Json rows = Json::array();
    for (const auto& f : *r.flattening) {
      Json x;
      x["class"] = f.class_name;
      x["class_id"] = f.class_id;
      x["level"] = f.level;
      x["images"] = f.images;
      x["skipped"] = f.skipped;
      x["baseline"] = opt(f.baseline);
      x["mixup"] = opt(f.mixup);
      x["difference"] = opt(f.difference);
      x["degenerate"] = f.degenerate;
      rows.push_back(x);
    }
    j["flattening"] = rows;
  }
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_report(const std::filesystem::path& path, const EvalReport& r) { write_text(path, report_to_json(r)); }

std::string metrics_csv(const EvalReport& r) {
  std::ostringstream os;
  os << csv_header(r.meta, "metrics") << "metric,value\n";
  if (!r.detection_metrics) return os.str();
  for (std::size_t c = 0; c < r.voc.per_class_ap.size(); ++c) {
    const std::string name = c < r.class_names.size() ? r.class_names[c] : std::to_string(c + 1);
    os << "ap_" << name << "," << csv_opt(r.voc.per_class_ap[c]) << "\n";
  }
  os << "map," << detail::format_double(r.voc.map) << "\n";
  const auto& m = r.coco;
  const std::pair<const char*, const std::optional<double>*> rows[] = {
      {"coco_ap", &m.ap},           {"coco_ap50", &m.ap50},         {"coco_ap75", &m.ap75},
      {"coco_ap_small", &m.ap_small}, {"coco_ap_medium", &m.ap_medium}, {"coco_ap_large", &m.ap_large},
      {"coco_ar1", &m.ar1},         {"coco_ar10", &m.ar10},         {"coco_ar100", &m.ar100},
      {"coco_ar_small", &m.ar_small}, {"coco_ar_medium", &m.ar_medium}, {"coco_ar_large", &m.ar_large}};
  for (const auto& [name, v] : rows) os << name << "," << csv_opt(*v) << "\n";
  return os.str();
}

std::string noise_csv(const NoiseSweepTable& t, const ReportMetadata& meta) {
  std::ostringstream os;
  os << csv_header(meta, "noise_sweep") << "model";
  for (double s : t.sigmas) os << ",sigma_" << detail::format_double(s);
  os << "\n";
  for (std::size_t i = 0; i < t.models.size(); ++i) {
    os << t.models[i];
    for (double v : t.map[i]) os << "," << detail::format_double(v);
    os << "\n";
  }
  if (t.difference) {
    os << "difference";
    for (double v : *t.difference) os << "," << detail::format_double(v);
    os << "\n";
  }
  return os.str();
}

std::string patch_csv(const PatchStudyResult& p, const ReportMetadata& meta) {
  std::ostringstream os;
  os << csv_header(meta, "patch_study")
     << "iou_threshold,copies,patches,patches_detected,precision,precision_defined,recall,map,invisible_patches\n";
  for (const auto& r : p.rows)
    os << detail::format_double(r.iou_threshold) << "," << r.copies << "," << r.patches << ","
       << detail::format_double(r.patches_detected) << "," << detail::format_double(r.precision) << ","
       << (r.precision_defined ? 1 : 0) << "," << detail::format_double(r.recall) << ","
       << detail::format_double(r.map) << "," << r.invisible_patches << "\n";
  return os.str();
}

std::string flattening_csv(const std::vector<FlatteningRow>& rows, const ReportMetadata& meta) {
  std::ostringstream os;
  os << csv_header(meta, "flattening") << "class,level,images,skipped,baseline,mixup,difference,degenerate\n";
  for (const auto& f : rows)
    os << f.class_name << "," << f.level << "," << f.images << "," << (f.skipped ? 1 : 0) << ","
       << csv_opt(f.baseline) << "," << csv_opt(f.mixup) << "," << csv_opt(f.difference) << ","
       << (f.degenerate ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace boxmix
