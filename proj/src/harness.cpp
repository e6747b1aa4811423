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
#include "boxmix/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "boxmix/augment.hpp"
#include "boxmix/error.hpp"
#include "boxmix/mixing.hpp"
#include "boxmix/parallel.hpp"
#include "boxmix/rng.hpp"
#include "text_util.hpp"

namespace boxmix {

namespace {

// Stream tags for derive_seed; every random decision has its own stream so
// that changing one mode's draws never shifts another's.
constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kAugmentStream = 0xA0;
constexpr std::uint64_t kPartnerAugmentStream = 0xA1;
constexpr std::uint64_t kMixStream = 0x3E;
constexpr std::uint64_t kNoiseStream = 0x4E01;
constexpr std::uint64_t kPatchStream = 0x9A7C;

bool all_false(const std::vector<bool>& v) { return std::none_of(v.begin(), v.end(), [](bool b) { return b; }); }

}  // namespace

ImageSet load_image_set(const std::filesystem::path& root, const std::string& split, int limit) {
  Dataset ds = load_dataset(root, split);
  ImageSet out;
  out.class_names = ds.manifest.classes;
  out.image_size = ds.manifest.image_size;
  std::size_t n = ds.size();
  if (limit > 0) n = std::min(n, static_cast<std::size_t>(limit));
  for (std::size_t i = 0; i < n; ++i) {
    out.images.push_back(ds.images[i].to_tensor());
    out.gts.push_back(ds.manifest.items[i].gt);
  }
  return out;
}

ItemGradient item_gradient(const DetectorSpec& spec, const ToyDetectorParams& params, const std::vector<Pass>& passes,
                           double mining_ratio) {
  ItemGradient out;
  bool first = true;
  for (const auto& pass : passes) {
    if (!pass.subset.empty() && all_false(pass.subset)) continue;  // contributes exactly zero
    const ForwardResult fr = forward(spec, params, pass.image);
    const DetectionLoss dl = detection_loss_with_grad(pass.targets, fr.preds, mining_ratio, pass.subset);
    GradientSet g = backward(spec, params, fr.cache, dl.grad);
    if (first) {
      out.grad = std::move(g);
      out.loss = dl.parts;
      first = false;
    } else {
      out.grad.add_scaled(g, 1.0);
      out.loss.cls += dl.parts.cls;
      out.loss.reg += dl.parts.reg;
      out.loss.total += dl.parts.total;
      out.loss.n_pos += dl.parts.n_pos;
    }
  }
  if (first) out.grad = params.zeros_like();
  return out;
}

std::vector<bool> level_mask(const AnchorSet& anchors, const std::vector<bool>& levels) {
  if (levels.size() != anchors.levels().size()) throw std::invalid_argument("level_mask: one flag per level expected");
  std::vector<bool> mask(anchors.size(), false);
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (levels[l])
      for (std::size_t a = anchors.levels()[l].begin; a < anchors.levels()[l].end(); ++a) mask[a] = true;
  return mask;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = make_rng(seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

std::vector<Pass> make_item_passes(const RunConfig& cfg, const ImageSet& data, const AnchorSet& anchors, int epoch,
                                   std::size_t position, std::span<const std::size_t> batch, std::size_t slot,
                                   const TrainHooks& hooks) {
  if (slot >= batch.size()) throw std::invalid_argument("make_item_passes: slot outside the batch");
  const std::size_t index = batch[slot];
  const auto e = static_cast<std::uint64_t>(epoch);
  const auto p = static_cast<std::uint64_t>(position);
  const int C = data.num_classes();
  const AugmentOptions aug;

  Sample s{data.images[index], data.gts[index]};
  if (cfg.augment) {
    Rng rng = make_rng(cfg.seed, {kAugmentStream, e, p});
    s = augment(s, aug, rng);
  }
  if (cfg.mode == TrainMode::kBaseline) return {Pass{std::move(s.image), match(s.gt, anchors, cfg.tau, C), {}}};

  Rng mix_rng = make_rng(cfg.seed, {kMixStream, e, p});
  std::size_t partner = index;
  if (batch.size() > 1) {
    std::size_t other = uniform_index(mix_rng, batch.size() - 1);
    if (other >= slot) ++other;
    partner = batch[other];
  }
  Sample s2{data.images[partner], data.gts[partner]};
  if (cfg.augment) {
    Rng rng = make_rng(cfg.seed, {kPartnerAugmentStream, e, p});
    s2 = augment(s2, aug, rng);
  }
  const MixWeight lam = hooks.pin_lambda ? MixWeight{*hooks.pin_lambda, cfg.alpha} : sample_lambda(cfg.alpha, mix_rng);
  ImageTensor mixed = mix_images(s.image, s2.image, lam);

  if (cfg.mode == TrainMode::kBoxStack)
    return {Pass{std::move(mixed), match(box_stack(s.gt, s2.gt), anchors, cfg.tau, C), {}}};

  AnchorTargets t = match(s.gt, anchors, cfg.tau, C);
  AnchorTargets mixed_t = box_mix(t, match(s2.gt, anchors, cfg.tau, C), lam);
  if (cfg.mode == TrainMode::kMixup) return {Pass{std::move(mixed), std::move(mixed_t), {}}};

  // Per-level: the mixed pass trains the target level(s), the clean pass
  // every other level.
  std::vector<bool> levels(anchors.levels().size(), false);
  if (hooks.mixed_levels) {
    levels = *hooks.mixed_levels;
  } else {
    levels.at(static_cast<std::size_t>(cfg.level)) = true;
  }
  std::vector<bool> mixed_mask = level_mask(anchors, levels);
  std::vector<bool> clean_mask(mixed_mask.size());
  for (std::size_t a = 0; a < mixed_mask.size(); ++a) clean_mask[a] = !mixed_mask[a];
  std::vector<Pass> passes;
  passes.push_back(Pass{std::move(mixed), std::move(mixed_t), std::move(mixed_mask)});
  passes.push_back(Pass{std::move(s.image), std::move(t), std::move(clean_mask)});
  return passes;
}

namespace {

std::string losses_csv(const RunConfig& cfg, const std::vector<EpochLoss>& losses) {
  std::ostringstream os;
  os << "# config_digest=" << cfg.digest_hex() << " seed=" << cfg.seed << "\n";
  os << "epoch,lr,cls,reg,total\n";
  for (const auto& l : losses)
    os << l.epoch << "," << detail::format_double(l.lr) << "," << detail::format_double(l.cls) << ","
       << detail::format_double(l.reg) << "," << detail::format_double(l.total) << "\n";
  return os.str();
}

std::string checkpoint_meta(const RunConfig& cfg, int epoch) {
  return "config_digest=" + cfg.digest_hex() + " seed=" + std::to_string(cfg.seed) + " mode=" + to_string(cfg.mode) +
         " epoch=" + std::to_string(epoch);
}

}  // namespace

RunRecord train(const RunConfig& cfg, const ImageSet& data, const ImageSet* test, const TrainHooks& hooks) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("training split is empty");
  RunRecord rec;
  rec.config = cfg;
  rec.config_digest = cfg.digest_hex();
  rec.spec = cfg.detector(data.num_classes(), data.image_size);
  const AnchorSet anchors = build_anchor_set(rec.spec.anchors);
  rec.params = init_params(rec.spec, cfg.seed);
  AdamState adam = make_adam_state(rec.params);
  const int threads = resolve_threads(cfg.threads);
  const std::size_t n = data.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  namespace fs = std::filesystem;
  if (hooks.write_outputs) {
    rec.run_dir = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(rec.run_dir / "checkpoints", ec);
    if (ec) throw IoError("cannot create run directory " + rec.run_dir.string() + ": " + ec.message());
    write_text(rec.run_dir / "config.txt", "# config_digest=" + rec.config_digest + "\n" + cfg.to_string());
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    AdamHyper hyper = cfg.adam();
    hyper.lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    const auto order = epoch_order(cfg.seed, epoch, n);
    EpochLoss el;
    el.epoch = epoch + 1;
    el.lr = hyper.lr;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      std::vector<ItemGradient> items(m);
      const std::span<const std::size_t> batch_ids(order.data() + start, m);
      parallel_for(m, threads, [&](std::size_t i) {
        const std::size_t pos = start + i;
        const auto passes = make_item_passes(cfg, data, anchors, epoch, pos, batch_ids, i, hooks);
        items[i] = item_gradient(rec.spec, rec.params, passes, cfg.mining_ratio);
      });
      // Fixed index order keeps the reduction independent of scheduling.
      GradientSet grad = rec.params.zeros_like();
      LossBreakdown mean;
      const double w = 1.0 / static_cast<double>(m);
      for (const auto& it : items) {
        grad.add_scaled(it.grad, w);
        mean.cls += it.loss.cls * w;
        mean.reg += it.loss.reg * w;
        mean.total += it.loss.total * w;
      }
      adam_step(rec.params, grad, adam, hyper);
      el.cls += mean.cls;
      el.reg += mean.reg;
      el.total += mean.total;
      el.batch_totals.push_back(mean.total);
      ++batches;
    }
    el.cls /= static_cast<double>(batches);
    el.reg /= static_cast<double>(batches);
    el.total /= static_cast<double>(batches);
    rec.losses.push_back(el);
    if (hooks.on_epoch) hooks.on_epoch(el.epoch, el.total);
    if (hooks.write_outputs) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", el.epoch);
      save_checkpoint(rec.run_dir / "checkpoints" / name, rec.spec, rec.params, checkpoint_meta(cfg, el.epoch));
      write_text(rec.run_dir / "losses.csv", losses_csv(cfg, rec.losses));
    }
  }

  if (hooks.write_outputs) {
    write_text(rec.run_dir / "losses.csv", losses_csv(cfg, rec.losses));
    rec.checkpoint = rec.run_dir / "model.ckpt";
    save_checkpoint(rec.checkpoint, rec.spec, rec.params, checkpoint_meta(cfg, cfg.epochs));
    rec.checkpoint_digest = file_digest(rec.checkpoint);
  }
  if (hooks.evaluate && test && test->size() > 0) {
    EvalOptions opt = EvalOptions::for_map(cfg);
    opt.threads = threads;
    EvalReport r = evaluate_model(rec.spec, rec.params, *test, opt);
    r.meta.command = "train";
    r.meta.config_digest = rec.config_digest;
    r.meta.seed = cfg.seed;
    r.meta.timestamp = report_timestamp();
    if (!rec.checkpoint_digest.empty()) r.meta.checkpoints = {rec.checkpoint_digest};
    if (hooks.write_outputs) {
      write_report(rec.run_dir / "report.json", r);
      write_text(rec.run_dir / "metrics.csv", metrics_csv(r));
    }
    rec.report = std::move(r);
  }
  return rec;
}

RunRecord train(const RunConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (cfg.data_dir.empty()) throw ConfigError("config key 'data' is required for training");
  const ImageSet data = load_image_set(cfg.data_dir, cfg.train_split, cfg.max_train_images);
  std::optional<ImageSet> test;
  if (hooks.evaluate && std::filesystem::exists(std::filesystem::path(cfg.data_dir) / cfg.test_split / "manifest.txt"))
    test = load_image_set(cfg.data_dir, cfg.test_split);
  return train(cfg, data, test ? &*test : nullptr, hooks);
}

RunRecord train_perlevel(RunConfig cfg, const TrainHooks& hooks) {
  cfg.mode = TrainMode::kPerLevel;
  return train(cfg, hooks);
}

EvalOptions EvalOptions::for_map(const RunConfig& cfg) {
  EvalOptions o;
  o.score_threshold = cfg.eval_score_threshold;
  o.nms_threshold = cfg.nms_threshold;
  o.top_k = cfg.top_k;
  o.threads = resolve_threads(cfg.threads);
  return o;
}

EvalOptions EvalOptions::for_counting(const RunConfig& cfg) {
  EvalOptions o = for_map(cfg);
  o.score_threshold = cfg.score_threshold;
  return o;
}

std::vector<ImageDetections> detect(const DetectorSpec& spec, const ToyDetectorParams& params,
                                    const std::vector<ImageTensor>& images, const EvalOptions& opt) {
  const AnchorSet anchors = build_anchor_set(spec.anchors);
  std::vector<ImageDetections> out(images.size());
  parallel_for(images.size(), opt.threads, [&](std::size_t i) {
    const ForwardResult fr = forward(spec, params, images[i]);
    out[i] = nms(decode_predictions(fr.preds, anchors, opt.score_threshold), opt.nms_threshold, opt.top_k);
  });
  return out;
}

EvalReport evaluate_model(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                          const EvalOptions& opt) {
  EvalReport r;
  r.class_names = data.class_names;
  r.images = static_cast<int>(data.size());
  const auto dets = detect(spec, params, data.images, opt);
  r.voc = voc_map(dets, data.gts, data.num_classes(), r.voc_iou_threshold, r.voc_style);
  r.coco = coco_ap(dets, data.gts, data.num_classes());
  return r;
}

std::vector<double> noise_sweep(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                                const std::vector<double>& sigmas, std::uint64_t seed, const EvalOptions& opt) {
  std::vector<double> maps;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    std::vector<ImageTensor> noisy(data.size());
    parallel_for(data.size(), opt.threads, [&](std::size_t i) {
      Rng rng = make_rng(seed, {kNoiseStream, s, i});
      noisy[i] = add_gaussian_noise(data.images[i], sigmas[s], rng);
    });
    const auto dets = detect(spec, params, noisy, opt);
    maps.push_back(voc_map(dets, data.gts, data.num_classes()).map);
  }
  return maps;
}

NoiseSweepTable noise_table(const std::vector<double>& sigmas, const std::vector<std::string>& names,
                            const std::vector<std::vector<double>>& maps) {
  if (names.size() != maps.size()) throw std::invalid_argument("noise_table: one name per model");
  for (const auto& m : maps)
    if (m.size() != sigmas.size()) throw std::invalid_argument("noise_table: one mAP per sigma");
  NoiseSweepTable t{sigmas, names, maps, std::nullopt};
  if (maps.size() == 2) {
    std::vector<double> d(sigmas.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = maps[1][i] - maps[0][i];
    t.difference = d;
  }
  return t;
}

PatchedCopy make_patched_copy(const ImageSet& data, const std::vector<Patch>& bank, std::uint64_t seed, int copy) {
  if (bank.empty()) throw std::invalid_argument("make_patched_copy: empty patch bank");
  PatchedCopy out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Rng rng = make_rng(seed, {kPatchStream, static_cast<std::uint64_t>(copy), i});
    const Patch& patch = bank[uniform_index(rng, bank.size())];
    const double scale = uniform(rng, kPatchMinScale, kPatchMaxScale);
    Transplant t = transplant_patch(data.images[i], patch, scale, rng);
    const bool visible = std::any_of(patch.alpha.begin(), patch.alpha.end(), [](double a) { return a > 0.0; });
    out.images.push_back(std::move(t.image));
    out.targets.push_back(PatchImage{{}, LabeledBox{t.patch_box, patch.class_id}, data.gts[i], visible});
  }
  return out;
}

PatchStudyRow average_patch_metrics(const std::vector<PatchMetrics>& per_copy, double iou_threshold) {
  PatchStudyRow row;
  row.iou_threshold = iou_threshold;
  row.copies = static_cast<int>(per_copy.size());
  if (per_copy.empty()) return row;
  row.patches = per_copy.front().patches;
  row.invisible_patches = per_copy.front().invisible_patches;
  int defined = 0;
  for (const auto& m : per_copy) {
    row.patches_detected += m.patches_detected;
    row.recall += m.recall;
    row.map += m.map;
    if (m.precision_defined) {
      row.precision += m.precision;
      ++defined;
    }
  }
  const auto n = static_cast<double>(per_copy.size());
  row.patches_detected /= n;
  row.recall /= n;
  row.map /= n;
  row.precision_defined = defined > 0;
  if (defined > 0) row.precision /= defined;
  return row;
}

PatchStudyResult patch_study(const DetectorSpec& spec, const ToyDetectorParams& params, const ImageSet& data,
                             const std::vector<Patch>& bank, int copies, std::uint64_t seed, const EvalOptions& opt,
                             const std::vector<double>& iou_thresholds) {
  if (copies < 1) throw std::invalid_argument("patch_study: copies must be at least 1");
  PatchStudyResult res;
  res.per_copy.assign(iou_thresholds.size(), {});
  for (int c = 0; c < copies; ++c) {
    PatchedCopy pc = make_patched_copy(data, bank, seed, c);
    const auto dets = detect(spec, params, pc.images, opt);
    for (std::size_t i = 0; i < dets.size(); ++i) pc.targets[i].dets = dets[i];
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t)
      res.per_copy[t].push_back(patch_metrics(pc.targets, data.num_classes(), iou_thresholds[t]));
  }
  for (std::size_t t = 0; t < iou_thresholds.size(); ++t)
    res.rows.push_back(average_patch_metrics(res.per_copy[t], iou_thresholds[t]));
  return res;
}

std::vector<double> level_logits(const PredictionField& preds, const AnchorSet& anchors, std::size_t level) {
  const auto& lv = anchors.levels().at(level);
  std::vector<double> row;
  row.reserve(lv.count() * static_cast<std::size_t>(preds.logit_width()));
  for (std::size_t a = lv.begin; a < lv.end(); ++a) {
    const auto l = preds.logits(a);
    row.insert(row.end(), l.begin(), l.end());
  }
  return row;
}

std::vector<FlatteningRow> flattening_study(const DetectorSpec& baseline_spec, const ToyDetectorParams& baseline,
                                            const DetectorSpec& mixup_spec, const ToyDetectorParams& mixup,
                                            const ImageSet& data, int threads) {
  if (baseline_spec.anchors.to_string() != mixup_spec.anchors.to_string())
    throw std::invalid_argument("flattening_study: checkpoints use different anchor grids");
  const AnchorSet anchors = build_anchor_set(baseline_spec.anchors);
  const std::size_t L = anchors.levels().size();
  // rows[model][image][level]
  std::vector<std::vector<std::vector<double>>> rows[2];
  const DetectorSpec* specs[2] = {&baseline_spec, &mixup_spec};
  const ToyDetectorParams* params[2] = {&baseline, &mixup};
  for (int m = 0; m < 2; ++m) {
    rows[m].resize(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
      const ForwardResult fr = forward(*specs[m], *params[m], data.images[i]);
      for (std::size_t l = 0; l < L; ++l) rows[m][i].push_back(level_logits(fr.preds, anchors, l));
    });
  }
  std::vector<int> label(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) label[i] = dominant_label(data.gts[i]);

  std::vector<FlatteningRow> out;
  for (int c = 1; c <= data.num_classes() + 1; ++c) {
    const bool merged = c == data.num_classes() + 1;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (merged || label[i] == c) members.push_back(i);
    for (std::size_t l = 0; l < L; ++l) {
      FlatteningRow r;
      r.class_id = merged ? 0 : c;
      r.class_name = merged ? "all" : data.class_names[static_cast<std::size_t>(c - 1)];
      r.level = static_cast<int>(l);
      r.images = static_cast<int>(members.size());
      if (members.size() < 2) {
        r.skipped = true;
        out.push_back(r);
        continue;
      }
      PcaRatio ratio[2];
      for (int m = 0; m < 2; ++m) {
        std::vector<std::vector<double>> group;
        for (std::size_t i : members) group.push_back(rows[m][i][l]);
        ratio[m] = pca_first_component_ratio(group);
      }
      r.baseline = ratio[0].ratio;
      r.mixup = ratio[1].ratio;
      r.difference = ratio[1].ratio - ratio[0].ratio;
      r.degenerate = ratio[0].degenerate || ratio[1].degenerate;
      out.push_back(r);
    }
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return detail::hex64(fnv1a64(bytes));
}

}  // namespace boxmix
