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
#include "boxmix/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "boxmix/error.hpp"
#include "boxmix/rng.hpp"
#include "text_util.hpp"

namespace boxmix {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kMixup: return "mixup";
    case TrainMode::kBoxStack: return "boxstack";
    case TrainMode::kPerLevel: return "perlevel";
  }
  return "baseline";
}

TrainMode parse_mode(const std::string& name) {
  if (name == "baseline") return TrainMode::kBaseline;
  if (name == "mixup") return TrainMode::kMixup;
  if (name == "boxstack") return TrainMode::kBoxStack;
  if (name == "perlevel") return TrainMode::kPerLevel;
  throw ConfigError("unknown mode '" + name + "' (expected baseline|mixup|boxstack|perlevel)");
}

RunConfig RunConfig::defaults(TrainMode mode) {
  RunConfig c;
  c.mode = mode;
  switch (mode) {
    case TrainMode::kBaseline:
    case TrainMode::kMixup: c.alpha = 0.2; break;
    case TrainMode::kBoxStack: c.alpha = 1.5; break;
    case TrainMode::kPerLevel:
      c.alpha = 0.75;
      c.batch_size = 16;
      break;
  }
  return c;
}

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool affects_results = true;
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

template <typename T>
Field int_field(std::string key, T RunConfig::*m, bool affects = true) {
  return {std::move(key),
          [m](RunConfig& c, const std::string& v) { c.*m = static_cast<T>(detail::parse_int(v)); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }, affects};
}

Field real_field(std::string key, double RunConfig::*m) {
  return {std::move(key), [m](RunConfig& c, const std::string& v) { c.*m = detail::parse_double(v); },
          [m](const RunConfig& c) { return detail::format_double(c.*m); }};
}

Field text_field(std::string key, std::string RunConfig::*m, bool affects = true) {
  return {std::move(key), [m](RunConfig& c, const std::string& v) { c.*m = v; },
          [m](const RunConfig& c) { return c.*m; }, affects};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      text_field("data", &RunConfig::data_dir),
      text_field("train_split", &RunConfig::train_split),
      text_field("test_split", &RunConfig::test_split),
      text_field("out", &RunConfig::out_dir, false),
      {"mode", [](RunConfig& c, const std::string& v) { c.mode = parse_mode(v); },
       [](const RunConfig& c) { return to_string(c.mode); }},
      real_field("alpha", &RunConfig::alpha),
      real_field("tau", &RunConfig::tau),
      real_field("mining_ratio", &RunConfig::mining_ratio),
      real_field("lr", &RunConfig::lr),
      real_field("beta1", &RunConfig::beta1),
      real_field("beta2", &RunConfig::beta2),
      real_field("weight_decay", &RunConfig::weight_decay),
      real_field("lr_decay", &RunConfig::lr_decay),
      int_field("batch_size", &RunConfig::batch_size),
      int_field("epochs", &RunConfig::epochs),
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const auto s = detail::parse_int(v);
         if (s < 0) throw std::invalid_argument("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      real_field("score_threshold", &RunConfig::score_threshold),
      real_field("eval_score_threshold", &RunConfig::eval_score_threshold),
      real_field("nms_threshold", &RunConfig::nms_threshold),
      int_field("top_k", &RunConfig::top_k),
      int_field("level", &RunConfig::level),
      {"augment", [](RunConfig& c, const std::string& v) { c.augment = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.augment ? "true" : "false"); }},
      int_field("max_train_images", &RunConfig::max_train_images),
      int_field("threads", &RunConfig::threads, false),
      {"anchors", [](RunConfig& c, const std::string& v) { c.anchors = AnchorGridSpec::parse(v); },
       [](const RunConfig& c) { return c.anchors.to_string(); }},
  };
  return f;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig RunConfig::from_pairs(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  if (auto it = kv.find("mode"); it != kv.end()) c = defaults(parse_mode(it->second));
  for (const auto& [key, value] : kv) {
    const auto& fs = fields();
    auto f = std::find_if(fs.begin(), fs.end(), [&](const Field& x) { return x.key == key; });
    if (f == fs.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      f->set(c, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> RunConfig::read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(alpha > 0.0, "alpha must be positive");
  require(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
  require(mining_ratio > 0.0, "mining_ratio must be positive");
  require(lr > 0.0, "lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(epochs >= 0, "epochs must be non-negative");
  require(score_threshold >= 0.0 && score_threshold <= 1.0, "score_threshold must lie in [0, 1]");
  require(eval_score_threshold >= 0.0 && eval_score_threshold <= 1.0, "eval_score_threshold must lie in [0, 1]");
  require(nms_threshold > 0.0 && nms_threshold < 1.0, "nms_threshold must lie in (0, 1)");
  require(top_k >= 1, "top_k must be at least 1");
  require(max_train_images >= 0, "max_train_images must be non-negative");
  require(threads >= 0, "threads must be non-negative");
  require(!anchors.levels.empty(), "anchors must define at least one level");
  if (mode == TrainMode::kPerLevel)
    require(level >= 0 && level < static_cast<int>(anchors.levels.size()),
            "level must index an anchor level (0.." + std::to_string(anchors.levels.size() - 1) + ")");
  try {
    build_anchor_set(anchors);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: anchors: ") + e.what());
  }
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(*this) << "\n";
  return os.str();
}

std::uint64_t RunConfig::digest() const {
  std::string canon;
  for (const auto& f : fields())
    if (f.affects_results) canon += f.key + "=" + f.get(*this) + "\n";
  return fnv1a64(canon);
}

std::string RunConfig::digest_hex() const { return detail::hex64(digest()); }

AdamHyper RunConfig::adam() const {
  AdamHyper h;
  h.lr = lr;
  h.beta1 = beta1;
  h.beta2 = beta2;
  h.weight_decay = weight_decay;
  return h;
}

DetectorSpec RunConfig::detector(int num_classes, int image_size) const {
  DetectorSpec spec = DetectorSpec::toy();
  spec.num_classes = num_classes;
  spec.input_size = image_size;
  spec.anchors = anchors;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("detector does not fit the data: ") + e.what());
  }
  return spec;
}

}  // namespace boxmix
