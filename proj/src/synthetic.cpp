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
#include "boxmix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "boxmix/error.hpp"
#include "text_util.hpp"

namespace boxmix {

namespace fs = std::filesystem;

void SceneSpec::validate() const {
  if (image_size < 8) throw std::invalid_argument("scene spec: image size too small");
  if (classes.size() < 2) throw std::invalid_argument("scene spec: need at least two classes");
  if (classes.size() > 3) throw std::invalid_argument("scene spec: only circle, square and triangle can be rendered");
  if (min_objects < 1 || max_objects < min_objects) throw std::invalid_argument("scene spec: bad object count range");
  if (!(min_scale > 0.0) || !(max_scale > min_scale) || max_scale > 1.0)
    throw std::invalid_argument("scene spec: bad object scale range");
  if (background_noise < 0.0 || min_contrast < 0.0 || min_contrast > 1.0)
    throw std::invalid_argument("scene spec: bad color settings");
  if (min_visible < 0.0 || min_visible > 1.0) throw std::invalid_argument("scene spec: bad visibility fraction");
}

std::string SceneSpec::to_string() const {
  std::ostringstream os;
  os << "image_size=" << image_size << ";classes=";
  for (std::size_t i = 0; i < classes.size(); ++i) os << (i ? "," : "") << classes[i];
  os << ";objects=" << min_objects << ".." << max_objects << ";scale=" << detail::format_double(min_scale) << ".."
     << detail::format_double(max_scale) << ";background_noise=" << detail::format_double(background_noise)
     << ";min_contrast=" << detail::format_double(min_contrast)
     << ";min_visible=" << detail::format_double(min_visible) << ";seed=" << seed;
  return os.str();
}

std::uint64_t SceneSpec::digest() const { return fnv1a64(to_string()); }

std::vector<bool> render_object_mask(const SceneObject& obj, int image_size) {
  std::vector<bool> mask(static_cast<std::size_t>(image_size) * image_size, false);
  const double half = 0.5 * obj.size;
  for (int j = 0; j < obj.size; ++j) {
    const int py = obj.y0 + j;
    if (py < 0 || py >= image_size) continue;
    for (int i = 0; i < obj.size; ++i) {
      const int px = obj.x0 + i;
      if (px < 0 || px >= image_size) continue;
      const double u = i + 0.5 - half;  // offset of the pixel center from the square's center
      const double v = j + 0.5 - half;
      bool inside = false;
      switch (static_cast<ShapeKind>(obj.class_id)) {
        case ShapeKind::kCircle:
          inside = u * u + v * v <= half * half;
          break;
        case ShapeKind::kSquare:
          inside = true;
          break;
        case ShapeKind::kTriangle:
          // Apex at the top; row j spans half-width (j + 1) / 2.
          inside = std::abs(u) <= 0.5 * (j + 1);
          break;
      }
      if (inside) mask[static_cast<std::size_t>(py) * image_size + px] = true;
    }
  }
  return mask;
}

std::optional<Box> tight_box(const std::vector<bool>& mask, int width, int height) {
  int x1 = width, y1 = height, x2 = -1, y2 = -1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
      x1 = std::min(x1, x);
      y1 = std::min(y1, y);
      x2 = std::max(x2, x);
      y2 = std::max(y2, y);
    }
  }
  if (x2 < 0) return std::nullopt;
  return Box::from_corners(static_cast<double>(x1) / width, static_cast<double>(y1) / height,
                           static_cast<double>(x2 + 1) / width, static_cast<double>(y2 + 1) / height);
}

namespace {

std::array<double, 3> random_color(Rng& rng) { return {uniform01(rng), uniform01(rng), uniform01(rng)}; }

double contrast(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, std::uint64_t index) {
  spec.validate();
  Rng rng = make_rng(spec.seed, {index});
  const int s = spec.image_size;
  const std::size_t npix = static_cast<std::size_t>(s) * s;

  const auto background = random_color(rng);
  const int n_objects = spec.min_objects + static_cast<int>(uniform_index(rng, spec.max_objects - spec.min_objects + 1));
  const int min_px = std::max(2, static_cast<int>(std::lround(spec.min_scale * s)));
  const int max_px = std::max(min_px, static_cast<int>(std::lround(spec.max_scale * s)));

  // owner[p] = index of the object visible at pixel p, or -1.
  std::vector<int> owner(npix, -1);
  std::vector<std::size_t> full_area;
  Scene scene;
  constexpr int kMaxTries = 20;
  for (int k = 0; k < n_objects; ++k) {
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      SceneObject obj;
      obj.class_id = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.num_classes())));
      obj.size = min_px + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_px - min_px + 1)));
      obj.x0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s - obj.size + 1)));
      obj.y0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s - obj.size + 1)));
      do {
        obj.color = random_color(rng);
      } while (contrast(obj.color, background) < spec.min_contrast);

      const auto mask = render_object_mask(obj, s);
      std::vector<int> trial = owner;
      std::size_t area = 0;
      for (std::size_t p = 0; p < npix; ++p)
        if (mask[p]) {
          trial[p] = static_cast<int>(scene.objects.size());
          ++area;
        }
      std::vector<std::size_t> visible(scene.objects.size(), 0);
      for (int o : trial)
        if (o >= 0 && static_cast<std::size_t>(o) < visible.size()) ++visible[static_cast<std::size_t>(o)];
      bool ok = true;
      for (std::size_t o = 0; o < visible.size(); ++o)
        if (visible[o] < spec.min_visible * static_cast<double>(full_area[o])) ok = false;
      if (!ok) continue;

      owner = std::move(trial);
      full_area.push_back(area);
      scene.gt.push_back(LabeledBox{*tight_box(mask, s, s), obj.class_id});
      scene.objects.push_back(obj);
      break;
    }
  }
  if (scene.objects.empty()) throw InvariantError("generate_scene: could not place any object");

  ImageTensor img(s, s, 3);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const int o = owner[static_cast<std::size_t>(y) * s + x];
      const auto& base = o >= 0 ? scene.objects[static_cast<std::size_t>(o)].color : background;
      for (int c = 0; c < 3; ++c) {
        const double n = spec.background_noise * (2.0 * uniform01(rng) - 1.0);
        img.at(y, x, c) = std::clamp(base[static_cast<std::size_t>(c)] + n, 0.0, 1.0);
      }
    }
  }
  scene.image = Image8::from_tensor(img);
  return scene;
}

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "boxmix-manifest 1\n";
  os << "split " << m.split << "\n";
  os << "count " << m.items.size() << "\n";
  os << "image_size " << m.image_size << "\n";
  os << "classes ";
  for (std::size_t i = 0; i < m.classes.size(); ++i) os << (i ? "," : "") << m.classes[i];
  os << "\n";
  os << "digest " << m.digest << "\n";
  for (const auto& it : m.items) {
    os << "item " << it.file << ' ' << it.gt.size();
    for (const auto& g : it.gt) {
      os << ' ' << g.class_id << ' ' << detail::format_double(g.box.x1()) << ' ' << detail::format_double(g.box.y1())
         << ' ' << detail::format_double(g.box.x2()) << ' ' << detail::format_double(g.box.y2());
    }
    os << "\n";
  }
  if (!os) throw IoError("write failed: " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t count = 0;
  bool header = false;
  auto fail = [&](const std::string& why) { return IoError("manifest " + path.string() + ": " + why); };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "boxmix-manifest") {
      int version = 0;
      ls >> version;
      if (version != 1) throw fail("unsupported version");
      header = true;
    } else if (key == "split") {
      ls >> m.split;
    } else if (key == "count") {
      ls >> count;
    } else if (key == "image_size") {
      ls >> m.image_size;
    } else if (key == "classes") {
      std::string v;
      ls >> v;
      m.classes = detail::split(v, ',');
    } else if (key == "digest") {
      ls >> m.digest;
    } else if (key == "item") {
      DatasetItem it;
      std::size_t n = 0;
      ls >> it.file >> n;
      for (std::size_t i = 0; i < n; ++i) {
        std::string c, x1, y1, x2, y2;
        if (!(ls >> c >> x1 >> y1 >> x2 >> y2)) throw fail("truncated item line");
        try {
          it.gt.push_back(LabeledBox{Box::from_corners(detail::parse_double(x1), detail::parse_double(y1),
                                                       detail::parse_double(x2), detail::parse_double(y2)),
                                     static_cast<int>(detail::parse_int(c))});
        } catch (const std::invalid_argument& e) {
          throw fail(e.what());
        }
      }
      if (!ls) throw fail("malformed item line");
      m.items.push_back(std::move(it));
    } else {
      throw fail("unknown record '" + key + "'");
    }
  }
  if (!header) throw fail("missing header");
  if (count != m.items.size()) throw fail("item count mismatch");
  return m;
}

DatasetManifest generate_dataset(const SceneSpec& spec, int n, const fs::path& out_dir, const std::string& split,
                                 std::uint64_t first_index) {
  if (n <= 0) throw std::invalid_argument("generate_dataset: n must be positive");
  spec.validate();
  const fs::path images_dir = out_dir / split / "images";
  std::error_code ec;
  fs::create_directories(images_dir, ec);
  if (ec) throw IoError("cannot create " + images_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.split = split;
  m.image_size = spec.image_size;
  m.classes = spec.classes;
  m.digest = detail::hex64(spec.digest());
  for (int i = 0; i < n; ++i) {
    const Scene scene = generate_scene(spec, first_index + static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.ppm", i);
    write_ppm(images_dir / name, scene.image);
    m.items.push_back(DatasetItem{name, scene.gt});
  }
  write_manifest(out_dir / split / "manifest.txt", m);
  return m;
}

Dataset load_dataset(const fs::path& root, const std::string& split) {
  Dataset ds;
  ds.manifest = read_manifest(root / split / "manifest.txt");
  ds.images.reserve(ds.manifest.items.size());
  for (const auto& it : ds.manifest.items) {
    ds.images.push_back(read_ppm(root / split / "images" / it.file));
    if (ds.images.back().width != ds.manifest.image_size || ds.images.back().height != ds.manifest.image_size)
      throw IoError("image size does not match manifest: " + it.file);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Corruptions

ImageTensor add_gaussian_noise(const ImageTensor& image, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: negative sigma");
  if (sigma == 0.0) return image;
  std::normal_distribution<double> dist(0.0, sigma);
  ImageTensor out = image;
  for (double& v : out.data()) v = std::clamp(v + dist(rng), 0.0, 1.0);
  return out;
}

Transplant transplant_patch(const ImageTensor& image, const Patch& patch, double scale, Rng& rng) {
  if (!(scale >= 0.1 && scale <= 0.4)) throw std::invalid_argument("transplant_patch: scale must lie in [0.1, 0.4]");
  const int ph = patch.rgb.height();
  const int pw = patch.rgb.width();
  if (ph <= 0 || pw <= 0 || patch.alpha.size() != static_cast<std::size_t>(ph) * pw)
    throw std::invalid_argument("transplant_patch: malformed patch");
  const double W = image.width();
  const double H = image.height();
  // Aspect ratio in normalized units, then area fixed to scale^2.
  const double aspect = (static_cast<double>(pw) / ph) * (H / W);
  const double bw = scale * std::sqrt(aspect);
  const double bh = scale / std::sqrt(aspect);
  if (bw > 1.0 || bh > 1.0) throw std::invalid_argument("transplant_patch: patch larger than image after resize");

  const double x1 = uniform(rng, 0.0, 1.0 - bw);
  const double y1 = uniform(rng, 0.0, 1.0 - bh);
  Transplant out{image, Box::from_corners(x1, y1, x1 + bw, y1 + bh)};
  for (int y = 0; y < image.height(); ++y) {
    const double v = ((y + 0.5) / H - y1) / bh;
    if (v < 0.0 || v >= 1.0) continue;
    const int sy = std::min(ph - 1, static_cast<int>(v * ph));
    for (int x = 0; x < image.width(); ++x) {
      const double u = ((x + 0.5) / W - x1) / bw;
      if (u < 0.0 || u >= 1.0) continue;
      const int sx = std::min(pw - 1, static_cast<int>(u * pw));
      const double a = patch.alpha[static_cast<std::size_t>(sy) * pw + sx];
      if (a == 0.0) continue;
      for (int c = 0; c < image.channels(); ++c)
        out.image.at(y, x, c) = a * patch.rgb.at(sy, sx, c) + (1.0 - a) * image.at(y, x, c);
    }
  }
  return out;
}

std::vector<Patch> make_patch_bank(const SceneSpec& spec, std::uint64_t seed, int variants) {
  spec.validate();
  std::vector<Patch> bank;
  Rng rng = make_rng(seed, {0xBA4C});
  for (int cls = 1; cls <= spec.num_classes(); ++cls) {
    for (int v = 0; v < variants; ++v) {
      SceneObject obj;
      obj.class_id = cls;
      obj.size = 24 + static_cast<int>(uniform_index(rng, 9));
      obj.color = random_color(rng);
      const auto mask = render_object_mask(obj, obj.size);
      Patch p;
      p.class_id = cls;
      p.rgb = ImageTensor(obj.size, obj.size, 3);
      p.alpha.assign(mask.size(), 0.0);
      for (int y = 0; y < obj.size; ++y) {
        for (int x = 0; x < obj.size; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * obj.size + x;
          for (int c = 0; c < 3; ++c) p.rgb.at(y, x, c) = obj.color[static_cast<std::size_t>(c)];
          p.alpha[i] = mask[i] ? 1.0 : 0.0;
        }
      }
      bank.push_back(std::move(p));
    }
  }
  return bank;
}

}  // namespace boxmix
