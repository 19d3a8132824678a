/*
 * Copyright (c) 2026, The CFAT-SR Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cfat/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cfat {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on raw engine bits; std distributions differ between standard
// libraries and would break cross-toolchain reproducibility.
double Initializer::normal() {
  const double u1 = 1.0 - unit_uniform(rng_);  // (0, 1]
  const double u2 = unit_uniform(rng_);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor<double> Initializer::trunc_normal(Shape shape, double sigma) {
  Tensor<double> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) {
    double z = normal();
    while (std::abs(z) > 2.0) z = normal();
    t[i] = sigma * z;
  }
  return t;
}

Tensor<double> Initializer::uniform(Shape shape, double bound) {
  Tensor<double> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = bound * (2.0 * unit_uniform(rng_) - 1.0);
  return t;
}

// Checkpoint layout (all integers little-endian):
//   "CFATCKPT"           8-byte magic
//   u32 version          = 1
//   u32 config length, then that many bytes of config text
//   u32 record count
//   per record: u32 name length, name bytes, u8 dtype (0 = f32),
//               u32 rank, rank x u64 dims
//   payloads: per record in header order, row-major little-endian f32
namespace {

constexpr char kMagic[8] = {'C', 'F', 'A', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("truncated checkpoint header");
  return v;
}

std::string get_string(std::istream& is, std::uint32_t len, std::size_t limit) {
  if (len > limit) throw CheckpointError("implausible string length in checkpoint");
  std::string s(len, '\0');
  if (len && !is.read(s.data(), len)) throw CheckpointError("truncated checkpoint header");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore<float>& params, const std::string& config_text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(config_text.size()));
  os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint8_t>(os, kDtypeF32);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (Index d : p.value.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  }
  for (const auto& p : params) {
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(float)));
  }
  if (!os) throw CheckpointError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path + ": not a checkpoint (bad magic)");
  }
  if (get<std::uint32_t>(is) != kVersion) throw CheckpointError(path + ": unsupported checkpoint version");

  Checkpoint ck;
  ck.config_text = get_string(is, get<std::uint32_t>(is), 1 << 20);
  const auto count = get<std::uint32_t>(is);
  if (count > (1u << 20)) throw CheckpointError(path + ": implausible record count");

  std::vector<std::pair<std::string, Shape>> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    std::string name = get_string(is, get<std::uint32_t>(is), 4096);
    if (get<std::uint8_t>(is) != kDtypeF32) throw CheckpointError(path + ": unsupported dtype for " + name);
    const auto rank = get<std::uint32_t>(is);
    if (rank > 8) throw CheckpointError(path + ": implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) {
      const auto v = get<std::uint64_t>(is);
      if (v > (1ull << 31)) throw CheckpointError(path + ": implausible dimension for " + name);
      d = static_cast<Index>(v);
    }
    records.emplace_back(std::move(name), std::move(shape));
  }
  for (auto& [name, shape] : records) {
    Tensor<float> t(shape);
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)))) {
      throw CheckpointError(path + ": truncated payload for " + name);
    }
    try {
      ck.params.add(name, std::move(t));
    } catch (const InvalidArgument& e) {
      throw CheckpointError(path + ": " + e.what());
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes after payload");
  return ck;
}

}  // namespace cfat
