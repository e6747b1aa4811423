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
#include "boxmix/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "boxmix/error.hpp"

namespace boxmix {

ImageTensor Image8::to_tensor() const {
  ImageTensor t(height, width, 3);
  auto& d = t.data();
  for (std::size_t i = 0; i < rgb.size(); ++i) d[i] = rgb[i] / 255.0;
  return t;
}

Image8 Image8::from_tensor(const ImageTensor& img) {
  if (img.channels() != 3) throw std::invalid_argument("Image8::from_tensor: expected 3 channels");
  Image8 out{img.height(), img.width(), std::vector<std::uint8_t>(img.size())};
  const auto& d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    out.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(d[i], 0.0, 1.0) * 255.0));
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image8& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255 || is.get() != '\n')
    throw IoError("not an 8-bit binary PPM: " + path.string());
  Image8 img{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw IoError("truncated PPM: " + path.string());
  return img;
}

ImageTensor resize_nearest(const ImageTensor& src, int height, int width) {
  ImageTensor out(height, width, src.channels());
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / width));
      for (int c = 0; c < src.channels(); ++c) out.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return out;
}

}  // namespace boxmix
