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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "boxmix/image.hpp"
#include "boxmix/matching.hpp"
#include "boxmix/rng.hpp"

namespace boxmix {

enum class ShapeKind { kCircle = 1, kSquare = 2, kTriangle = 3 };

/// Scene generator settings. Object scale is the side of the object's
/// square bounding box as a fraction of the image side.
struct SceneSpec {
  int image_size = 64;
  std::vector<std::string> classes = {"circle", "square", "triangle"};
  int min_objects = 1;
  int max_objects = 4;
  double min_scale = 0.25;
  double max_scale = 0.5;
  double background_noise = 0.04;  // per-pixel uniform amplitude
  double min_contrast = 0.3;       // object vs background, max channel difference
  double min_visible = 0.4;        // fraction of each object left unoccluded
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(classes.size()); }
  void validate() const;
  std::string to_string() const;
  std::uint64_t digest() const;
};

/// One rendered object: a shape inscribed in the pixel square
/// [x0, x0 + size) x [y0, y0 + size).
struct SceneObject {
  int class_id = 1;
  int x0 = 0;
  int y0 = 0;
  int size = 1;
  std::array<double, 3> color{};
};

/// Pixel membership of a single shape, row-major over an image_size^2 grid.
std::vector<bool> render_object_mask(const SceneObject& obj, int image_size);

/// Tight normalized box of the non-zero entries of a mask; nullopt if empty.
std::optional<Box> tight_box(const std::vector<bool>& mask, int width, int height);

struct Scene {
  Image8 image;
  GroundTruth gt;
  std::vector<SceneObject> objects;
};

/// Deterministic scene for (spec.seed, index).
Scene generate_scene(const SceneSpec& spec, std::uint64_t index);

struct DatasetItem {
  std::string file;  // relative to the split's images/ directory
  GroundTruth gt;
  friend bool operator==(const DatasetItem&, const DatasetItem&) = default;
};

struct DatasetManifest {
  std::string split;
  int image_size = 0;
  std::vector<std::string> classes;
  std::string digest;  // hex digest of the generating SceneSpec
  std::vector<DatasetItem> items;

  int num_classes() const { return static_cast<int>(classes.size()); }
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Line-oriented manifest; format in docs/formats.md. Throws IoError.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes scenes first_index .. first_index + n - 1 to
/// out_dir/<split>/images/NNNNNN.ppm and out_dir/<split>/manifest.txt.
/// Throws std::invalid_argument if n <= 0 and IoError on write failure.
DatasetManifest generate_dataset(const SceneSpec& spec, int n, const std::filesystem::path& out_dir,
                                 const std::string& split = "train", std::uint64_t first_index = 0);

/// Scene index offset used for the test split by `gen-data`.
inline constexpr std::uint64_t kTestSceneOffset = 1000000000ull;

/// A loaded split, images kept as 8-bit pixels.
struct Dataset {
  DatasetManifest manifest;
  std::vector<Image8> images;

  std::size_t size() const { return images.size(); }
};

Dataset load_dataset(const std::filesystem::path& root, const std::string& split);

/// Additive N(0, sigma^2) noise per pixel and channel, clamped to [0, 1].
ImageTensor add_gaussian_noise(const ImageTensor& image, double sigma, Rng& rng);

/// RGB cut-out with per-pixel opacity in [0, 1].
struct Patch {
  ImageTensor rgb;
  std::vector<double> alpha;  // height * width, row-major
  int class_id = 1;
};

struct Transplant {
  ImageTensor image;
  Box patch_box;
};

/// Pastes the patch at a uniform random position fully inside the image.
/// `scale` is linear: the pasted box keeps the patch aspect ratio and covers
/// scale^2 of the image area. Pixels whose centers fall inside the box are
/// alpha-composited from the nearest patch pixel.
/// Throws std::invalid_argument if scale is outside [0.1, 0.4] or the
/// resized patch does not fit in the image.
Transplant transplant_patch(const ImageTensor& image, const Patch& patch, double scale, Rng& rng);

/// `variants` rendered cut-outs per class (shape mask as alpha).
std::vector<Patch> make_patch_bank(const SceneSpec& spec, std::uint64_t seed, int variants = 3);

}  // namespace boxmix
