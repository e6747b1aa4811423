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
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "boxmix/detector.hpp"
#include "boxmix/error.hpp"
#include "boxmix/rng.hpp"

// Layout (all integers little-endian):
//   "BOXMIXCK"            8-byte magic
//   u32 version           currently 1
//   u64 spec digest       fnv1a64 of the spec text below
//   u32 n, n bytes        canonical DetectorSpec text
//   u32 n, n bytes        run metadata text (config digest, seed)
//   u32 block count
//   per block: u32 rank, rank x u32 dims, prod(dims) x f64 payload
//   u64 checksum          fnv1a64 of every preceding byte
// Blocks alternate weight, bias for each layer in ToyDetectorParams order.

namespace boxmix {

namespace {

constexpr char kMagic[8] = {'B', 'O', 'X', 'M', 'I', 'X', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw IoError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.data) w.f64(v);
}

void read_tensor_into(Reader& r, Tensor& t) {
  const std::uint32_t rank = r.u32();
  if (rank != t.shape.size()) throw IoError("checkpoint block rank mismatch");
  for (int d : t.shape)
    if (r.u32() != static_cast<std::uint32_t>(d)) throw IoError("checkpoint block shape mismatch");
  for (double& v : t.data) v = r.f64();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DetectorSpec& spec, const ToyDetectorParams& params,
                     const std::string& meta) {
  const std::string spec_text = spec.to_string();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u64(fnv1a64(spec_text));
  w.u32(static_cast<std::uint32_t>(spec_text.size()));
  w.bytes(spec_text.data(), spec_text.size());
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  w.u32(static_cast<std::uint32_t>(params.layers.size() * 2));
  for (const auto& l : params.layers) {
    write_tensor(w, l.weight);
    write_tensor(w, l.bias);
  }
  w.u64(fnv1a64(w.str()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 8) throw IoError("checkpoint truncated: " + path.string());

  const std::size_t body = buf.size() - 8;
  Reader trailer(buf, buf.size());
  (void)trailer.bytes(body);
  if (trailer.u64() != fnv1a64(std::string_view(buf.data(), body)))
    throw IoError("checkpoint checksum mismatch: " + path.string());

  Reader r(buf, body);
  if (std::memcmp(r.bytes(sizeof(kMagic)).data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint: " + path.string());
  if (r.u32() != kVersion) throw IoError("unsupported checkpoint version: " + path.string());
  const std::uint64_t digest = r.u64();
  const std::string spec_text = r.bytes(r.u32());
  if (fnv1a64(spec_text) != digest) throw IoError("checkpoint spec digest mismatch: " + path.string());

  Checkpoint ck;
  ck.meta = r.bytes(r.u32());
  try {
    ck.spec = DetectorSpec::parse(spec_text);
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint carries an invalid detector spec: ") + e.what());
  }
  ck.params = zero_params(ck.spec);
  if (r.u32() != ck.params.layers.size() * 2) throw IoError("checkpoint block count mismatch");
  for (auto& l : ck.params.layers) {
    read_tensor_into(r, l.weight);
    read_tensor_into(r, l.bias);
  }
  if (r.pos() != body) throw IoError("checkpoint has trailing data: " + path.string());
  return ck;
}

}  // namespace boxmix
