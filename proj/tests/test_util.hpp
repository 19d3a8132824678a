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

#pragma once

#include "cfat/checks.hpp"
#include "cfat/tensor.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

namespace cfat::test {

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

inline Tensor<double> random_map(Index b, Index h, Index w, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({b, h, w, c}, rng);
}

// Fresh scratch directory in the system temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cfat_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cfat::test
