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

#include "cfat/pipeline.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace cfat {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit PNG -> H x W x 3 in [0, 1]. Gray, palette and alpha inputs are
/// converted to RGB (alpha dropped).
Image read_png(const std::string& path);
/// Values are clamped to [0, 1] and rounded to 8 bits.
void write_png(const std::string& path, const Image& img);

/// Sorted *.png paths in a directory (non-recursive).
std::vector<std::string> list_pngs(const std::string& dir);

}  // namespace cfat
