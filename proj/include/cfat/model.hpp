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

#include "cfat/blocks.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cfat {

struct ModelConfig {
  int scale = 4;
  int channels = 32;
  int heads = 2;
  int rect_window = 8;
  int tri_window = 16;
  std::vector<int> shifts{0, 4, 8, 12};  // one HWAB per entry
  int n_wab = 2;                         // alternating dense, sparse, dense, ...
  int n_pairs = 2;                       // rect/tri pairs per HWAB
  double alpha = 0.01;
  double beta = 0.015;
  double overlap = 0.5;
  int interval = 2;
  int mlp_ratio = 2;
  int in_channels = 3;
  int se_squeeze = 4;
  bool use_cwab = true;
  bool circular = false;

  static ModelConfig paper();
  static ModelConfig tiny();
  static ModelConfig preset(const std::string& name);

  void validate() const;
  UnitConfig unit() const;
  int n_hwab() const { return static_cast<int>(shifts.size()); }
  /// Spatial multiple the body needs; inputs are reflect-padded up to it.
  int pad_multiple() const { return interval * tri_window; }

  /// Flat `key = value` text, one field per line; `#` starts a comment.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  static ModelConfig from_text(const std::string& text, const ModelConfig& base);
  /// Sets one field by name; unknown keys and malformed values throw.
  void set(const std::string& key, const std::string& value);
};

struct ConvParams {
  ParamId w, b;
};

struct Model {
  ModelConfig config;
  ConvParams head;
  std::vector<WabParams> wabs;
  ConvParams body;
  std::vector<ConvParams> upsample;  // one conv per pixel-shuffle stage
  ConvParams out;
};

/// Pixel-shuffle factors of the tail: {2, 2} for x4, {2} for x2, {3} for x3.
std::vector<int> upsample_stages(int scale);

/// Deterministic construction. With `zero_residual` every WAB and the body
/// conv start at zero, so the body is the identity on the head features.
Model build(const ModelConfig& cfg, ParamStore<double>& store, std::uint64_t seed, bool zero_residual = false);

/// B x H x W x in_channels in [0, 1] -> B x rH x rW x in_channels.
template <typename S>
Var<S> forward(const Model& model, Binder<S>& bind, const Var<S>& lr);

/// The same network with the body skipped: head -> tail on the padded input.
template <typename S>
Var<S> forward_head_tail(const Model& model, Binder<S>& bind, const Var<S>& lr);

/// Gradient-free forward.
template <typename S>
Tensor<S> infer(const Model& model, ParamStore<S>& params, const Tensor<S>& lr);

}  // namespace cfat
