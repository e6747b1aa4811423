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
#include "boxmix/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "boxmix/config.hpp"
#include "boxmix/error.hpp"
#include "boxmix/harness.hpp"
#include "boxmix/parallel.hpp"
#include "boxmix/mixing.hpp"
#include "boxmix/report.hpp"
#include "boxmix/rng.hpp"
#include "boxmix/synthetic.hpp"
#include "oracles/selfcheck.hpp"
#include "text_util.hpp"

namespace boxmix {

namespace fs = std::filesystem;

std::vector<std::uint64_t> beta_histogram(double alpha, std::uint64_t n, std::uint64_t seed, int bins) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (n == 0) throw std::invalid_argument("n must be positive");
  if (bins < 1) throw std::invalid_argument("bins must be positive");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  Rng rng = make_rng(seed, {0xBE7A});
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = sample_beta(alpha, alpha, rng);
    const int b = std::min(bins - 1, static_cast<int>(x * bins));
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

namespace {

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> h = {
      {"data", "dataset root containing <split>/manifest.txt"},
      {"train_split", "training split name"},
      {"test_split", "evaluation split name"},
      {"out", "output directory"},
      {"mode", "baseline | mixup | boxstack | perlevel"},
      {"alpha", "Beta(alpha, alpha) parameter (0.2; boxstack 1.5; perlevel 0.75)"},
      {"tau", "matching IoU threshold"},
      {"mining_ratio", "negatives kept per positive"},
      {"lr", "initial learning rate"},
      {"beta1", "first-moment decay"},
      {"beta2", "second-moment decay"},
      {"weight_decay", "decoupled weight decay"},
      {"lr_decay", "per-epoch learning-rate factor"},
      {"batch_size", "items per step (32; perlevel 16)"},
      {"epochs", "passes over the training split"},
      {"seed", "run seed"},
      {"score_threshold", "score cut for counting detections (patch study)"},
      {"eval_score_threshold", "score cut before NMS for mAP"},
      {"nms_threshold", "NMS IoU threshold"},
      {"top_k", "detections kept per image"},
      {"level", "per-level mode: anchor level trained on the mixed pass"},
      {"augment", "flip, color jitter and crop during training"},
      {"max_train_images", "use only the first N training images (0 = all)"},
      {"threads", "worker threads (0 = hardware); never changes results"},
      {"anchors", "anchor grid, e.g. 8x8:0.27/0.36:1;4x4:0.46/0.56:1;2x2:0.7/0.85:1"},
  };
  return h;
}

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_path, "key = value configuration file; flags override it");
  for (const auto& key : config_keys()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const auto it = key_help().find(key);
    f.options.emplace_back(key, app->add_option(flag, f.values[key], it == key_help().end() ? key : it->second));
  }
  app->add_option("--set", f.sets, "additional key=value override (repeatable)");
}

RunConfig resolve_config(const ConfigFlags& f) {
  std::map<std::string, std::string> kv;
  if (!f.config_path.empty()) kv = RunConfig::read_pairs(f.config_path);
  for (const auto& [key, opt] : f.options)
    if (opt->count() > 0) kv[key] = f.values.at(key);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[detail::trim(s.substr(0, eq))] = detail::trim(s.substr(eq + 1));
  }
  return RunConfig::from_pairs(kv);
}

ImageSet load_eval_split(const RunConfig& cfg, const std::string& split) {
  if (cfg.data_dir.empty()) throw ConfigError("--data is required");
  return load_image_set(cfg.data_dir, split.empty() ? cfg.test_split : split);
}

void require_compatible(const Checkpoint& ck, const ImageSet& data) {
  if (ck.spec.num_classes != data.num_classes())
    throw ConfigError("checkpoint has " + std::to_string(ck.spec.num_classes) + " classes, data has " +
                      std::to_string(data.num_classes()));
  if (ck.spec.input_size != data.image_size)
    throw ConfigError("checkpoint expects " + std::to_string(ck.spec.input_size) + "px images, data has " +
                      std::to_string(data.image_size));
}

ReportMetadata metadata(const std::string& command, const RunConfig& cfg, const std::vector<std::string>& ckpts) {
  ReportMetadata m;
  m.command = command;
  m.config_digest = cfg.digest_hex();
  m.seed = cfg.seed;
  m.timestamp = report_timestamp();
  for (const auto& c : ckpts) m.checkpoints.push_back(file_digest(c));
  return m;
}

EvalReport base_report(const Checkpoint& ck, const ImageSet& data, const RunConfig& cfg) {
  return evaluate_model(ck.spec, ck.params, data, EvalOptions::for_map(cfg));
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixup regularization for anchor-based detectors on synthetic shapes", "boxmix"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::function<void()> action;

  // gen-data
  SceneSpec scene;
  int n_train = 2000, n_test = 300;
  std::string data_out;
  auto* gen = app.add_subcommand("gen-data", "Render a synthetic shapes dataset (train and test splits)");
  gen->add_option("--out", data_out, "output root")->required();
  gen->add_option("--train", n_train, "training images")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--test", n_test, "test images")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", scene.seed, "scene seed")->capture_default_str();
  gen->add_option("--image-size", scene.image_size, "image side in pixels")->capture_default_str();
  gen->add_option("--min-objects", scene.min_objects, "objects per image, lower bound")->capture_default_str();
  gen->add_option("--max-objects", scene.max_objects, "objects per image, upper bound")->capture_default_str();
  gen->add_option("--min-scale", scene.min_scale, "object side over image side, lower bound")->capture_default_str();
  gen->add_option("--max-scale", scene.max_scale, "object side over image side, upper bound")->capture_default_str();
  gen->add_option("--noise", scene.background_noise, "background noise amplitude")->capture_default_str();
  gen->callback([&] {
    action = [&] {
      try {
        scene.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      generate_dataset(scene, n_train, data_out, "train", 0);
      generate_dataset(scene, n_test, data_out, "test", kTestSceneOffset);
      out << "wrote " << n_train << " train and " << n_test << " test images to " << data_out << " (scene digest "
          << detail::hex64(scene.digest()) << ")\n";
    };
  });

  // train
  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a detector; writes config, losses, checkpoints and a report");
  add_config_flags(train_cmd, train_flags);
  train_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(train_flags);
      TrainHooks hooks;
      hooks.on_epoch = [&](int epoch, double loss) {
        out << "epoch " << epoch << "/" << cfg.epochs << " loss " << detail::format_double(loss) << "\n";
      };
      const RunRecord rec = train(cfg, hooks);
      out << "run " << rec.run_dir.string() << " config_digest " << rec.config_digest << " checkpoint "
          << rec.checkpoint_digest << "\n";
      if (rec.report) out << "map " << detail::format_double(rec.report->voc.map) << "\n";
    };
  });

  // eval
  ConfigFlags eval_flags;
  std::string eval_ckpt, eval_split;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (VOC mAP and COCO AP/AR)");
  add_config_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--split", eval_split, "split to evaluate (default: test_split)");
  eval_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(eval_flags);
      const Checkpoint ck = load_checkpoint(eval_ckpt);
      const ImageSet data = load_eval_split(cfg, eval_split);
      require_compatible(ck, data);
      EvalReport r = base_report(ck, data, cfg);
      r.meta = metadata("eval", cfg, {eval_ckpt});
      write_report(fs::path(cfg.out_dir) / "report.json", r);
      write_text(fs::path(cfg.out_dir) / "metrics.csv", metrics_csv(r));
      out << "map " << detail::format_double(r.voc.map) << "\n";
    };
  });

  // eval-noise
  ConfigFlags noise_flags;
  std::string noise_ckpt, noise_compare, noise_split, noise_sigmas = "0,0.1,0.2,0.4", noise_names = "baseline,mixup";
  auto* noise_cmd = app.add_subcommand("eval-noise", "mAP under additive Gaussian noise for one or two checkpoints");
  add_config_flags(noise_cmd, noise_flags);
  noise_cmd->add_option("--checkpoint", noise_ckpt, "model checkpoint (first row)")->required();
  noise_cmd->add_option("--compare", noise_compare, "second checkpoint; adds a difference row (second - first)");
  noise_cmd->add_option("--sigmas", noise_sigmas, "comma-separated noise levels")->capture_default_str();
  noise_cmd->add_option("--names", noise_names, "row names for the checkpoints")->capture_default_str();
  noise_cmd->add_option("--split", noise_split, "split to evaluate (default: test_split)");
  noise_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(noise_flags);
      std::vector<double> sigmas;
      for (const auto& s : detail::split(noise_sigmas, ',')) {
        const double v = detail::parse_double(s);
        if (v < 0.0) throw ConfigError("noise levels must be non-negative");
        sigmas.push_back(v);
      }
      const ImageSet data = load_eval_split(cfg, noise_split);
      std::vector<std::string> paths{noise_ckpt};
      if (!noise_compare.empty()) paths.push_back(noise_compare);
      const auto all_names = detail::split(noise_names, ',');
      std::vector<std::string> names;
      std::vector<std::vector<double>> maps;
      std::optional<EvalReport> first;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const Checkpoint ck = load_checkpoint(paths[i]);
        require_compatible(ck, data);
        names.push_back(i < all_names.size() ? all_names[i] : "model" + std::to_string(i));
        maps.push_back(noise_sweep(ck.spec, ck.params, data, sigmas, cfg.seed, EvalOptions::for_map(cfg)));
        if (i == 0) first = base_report(ck, data, cfg);
      }
      EvalReport r = *first;
      r.meta = metadata("eval-noise", cfg, paths);
      r.noise = noise_table(sigmas, names, maps);
      write_report(fs::path(cfg.out_dir) / "report.json", r);
      write_text(fs::path(cfg.out_dir) / "noise.csv", noise_csv(*r.noise, r.meta));
      out << noise_csv(*r.noise, r.meta);
    };
  });

  // eval-patch
  ConfigFlags patch_flags;
  std::string patch_ckpt, patch_split;
  int copies = 5;
  auto* patch_cmd = app.add_subcommand("eval-patch", "Transplanted-patch study over patched copies of a split");
  add_config_flags(patch_cmd, patch_flags);
  patch_cmd->add_option("--checkpoint", patch_ckpt, "model checkpoint")->required();
  patch_cmd->add_option("--copies", copies, "independently patched copies")->capture_default_str()->check(
      CLI::PositiveNumber);
  patch_cmd->add_option("--split", patch_split, "split to patch (default: test_split)");
  patch_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(patch_flags);
      const Checkpoint ck = load_checkpoint(patch_ckpt);
      const ImageSet data = load_eval_split(cfg, patch_split);
      require_compatible(ck, data);
      SceneSpec bank_spec;
      bank_spec.image_size = data.image_size;
      bank_spec.classes = data.class_names;
      const auto bank = make_patch_bank(bank_spec, cfg.seed);
      EvalReport r;
      r.detection_metrics = false;
      r.class_names = data.class_names;
      r.images = static_cast<int>(data.size());
      r.meta = metadata("eval-patch", cfg, {patch_ckpt});
      r.patch = patch_study(ck.spec, ck.params, data, bank, copies, cfg.seed, EvalOptions::for_counting(cfg));
      write_report(fs::path(cfg.out_dir) / "report.json", r);
      write_text(fs::path(cfg.out_dir) / "patch.csv", patch_csv(*r.patch, r.meta));
      out << patch_csv(*r.patch, r.meta);
    };
  });

  // analyze-flatten
  ConfigFlags flat_flags;
  std::string flat_baseline, flat_mixup, flat_split;
  auto* flat_cmd = app.add_subcommand("analyze-flatten", "PCA explained-variance ratios of per-level logits");
  add_config_flags(flat_cmd, flat_flags);
  flat_cmd->add_option("--baseline", flat_baseline, "baseline checkpoint")->required();
  flat_cmd->add_option("--mixup", flat_mixup, "mixup checkpoint")->required();
  flat_cmd->add_option("--split", flat_split, "split to analyze (default: test_split)");
  flat_cmd->callback([&] {
    action = [&] {
      const RunConfig cfg = resolve_config(flat_flags);
      const Checkpoint b = load_checkpoint(flat_baseline);
      const Checkpoint m = load_checkpoint(flat_mixup);
      const ImageSet data = load_eval_split(cfg, flat_split);
      require_compatible(b, data);
      require_compatible(m, data);
      if (b.spec.anchors.to_string() != m.spec.anchors.to_string())
        throw ConfigError("baseline and mixup checkpoints use different anchor grids");
      EvalReport r;
      r.detection_metrics = false;
      r.class_names = data.class_names;
      r.images = static_cast<int>(data.size());
      r.meta = metadata("analyze-flatten", cfg, {flat_baseline, flat_mixup});
      r.flattening = flattening_study(b.spec, b.params, m.spec, m.params, data, resolve_threads(cfg.threads));
      write_report(fs::path(cfg.out_dir) / "report.json", r);
      write_text(fs::path(cfg.out_dir) / "flattening.csv", flattening_csv(*r.flattening, r.meta));
      out << flattening_csv(*r.flattening, r.meta);
    };
  });

  // plot-beta
  double beta_alpha = 0.2;
  std::uint64_t beta_n = 100000, beta_seed = 0;
  std::string beta_out;
  auto* beta_cmd = app.add_subcommand("plot-beta", "50-bin histogram CSV of Beta(alpha, alpha) draws");
  beta_cmd->add_option("--alpha", beta_alpha, "distribution parameter")->capture_default_str();
  beta_cmd->add_option("--n", beta_n, "number of draws")->capture_default_str();
  beta_cmd->add_option("--seed", beta_seed, "sampling seed")->capture_default_str();
  beta_cmd->add_option("--out", beta_out, "CSV path (default: stdout)");
  beta_cmd->callback([&] {
    action = [&] {
      if (!(beta_alpha > 0.0)) throw ConfigError("--alpha must be positive");
      if (beta_n == 0) throw ConfigError("--n must be positive");
      const auto counts = beta_histogram(beta_alpha, beta_n, beta_seed);
      const std::string canon =
          "alpha=" + detail::format_double(beta_alpha) + "\nn=" + std::to_string(beta_n) + "\nseed=" +
          std::to_string(beta_seed) + "\n";
      std::ostringstream os;
      os << "# schema=" << kReportSchema << ".beta_histogram version=" << kReportVersion
         << " config_digest=" << detail::hex64(fnv1a64(canon)) << " seed=" << beta_seed << "\n";
      os << "bin_lo,bin_hi,count\n";
      const auto bins = static_cast<double>(counts.size());
      for (std::size_t b = 0; b < counts.size(); ++b)
        os << detail::format_double(static_cast<double>(b) / bins) << ","
           << detail::format_double(static_cast<double>(b + 1) / bins) << "," << counts[b] << "\n";
      if (beta_out.empty()) {
        out << os.str();
      } else {
        write_text(beta_out, os.str());
      }
    };
  });

  // selfcheck
  int selfcheck_status = kExitOk;
  auto* self_cmd = app.add_subcommand("selfcheck", "Run the embedded oracle suites and print a pass/fail table");
  self_cmd->callback([&] {
    action = [&] {
      const auto rows = oracle::run_selfcheck();
      oracle::print_selfcheck(out, rows);
      if (std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.passed; }))
        selfcheck_status = kExitInternal;
    };
  });

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (action) action();
    return selfcheck_status;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"boxmix"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace boxmix
