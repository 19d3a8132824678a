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

#include "cfat/attention.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfat {

struct UnitConfig {
  int channels = 32;
  int heads = 2;
  int rect_window = 8;
  int tri_window = 16;
  int shift = 0;
  int interval = 1;
  double alpha = 0.01;
  double beta = 0.015;
  int mlp_ratio = 2;
  int se_squeeze = 4;
  double overlap = 0.5;  // OCFAB k
  bool use_cwab = true;
  // Treat the map as a torus: wrap-around conv and unfold borders, no shift
  // masks. Makes the blocks exactly equivariant to cyclic shifts.
  bool circular = false;

  void validate() const;
};

struct LayerNormParams {
  ParamId gamma, beta;
};

struct MlpParams {
  ParamId w1, b1, w2, b2;
};

/// Depthwise 3x3 + pointwise 1x1 pair, twice, then squeeze-excitation.
struct CwabParams {
  ParamId dw1_w, dw1_b, pw1_w, pw1_b;
  ParamId dw2_w, dw2_b, pw2_w, pw2_b;
  ParamId se1_w, se1_b, se2_w, se2_b;
};

enum class UnitKind { Rect, Tri };

struct UnitParams {
  UnitKind kind = UnitKind::Rect;
  LayerNormParams ln1;
  AttnParams attn;
  std::optional<CwabParams> cwab;
  LayerNormParams ln2;
  MlpParams mlp;
};

struct HwabParams {
  int shift = 0;
  std::vector<UnitParams> units;  // rect, tri, rect, tri, ...
};

struct OcfabParams {
  LayerNormParams ln1;
  AttnParams attn;
  LayerNormParams ln2;
  MlpParams mlp;
};

enum class WabKind { Dense, Sparse };

struct WabParams {
  WabKind kind = WabKind::Dense;
  std::vector<HwabParams> hwabs;
  OcfabParams ocfab;
  ParamId conv_w, conv_b;
};

/// Parameter construction. With `zero_residual` every branch that feeds a
/// residual sum (attention output projections, second MLP layers, the last
/// CWAB pointwise conv and the WAB conv) starts at zero, so every unit and
/// block is the identity map.
struct BlockInit {
  ParamStore<double>& store;
  Initializer& init;
  bool zero_residual = false;
};

LayerNormParams add_layer_norm_params(BlockInit& b, const std::string& prefix, int channels);
MlpParams add_mlp_params(BlockInit& b, const std::string& prefix, int channels, int hidden);
CwabParams add_cwab_params(BlockInit& b, const std::string& prefix, int channels, int squeeze);
UnitParams add_unit_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, UnitKind kind);
HwabParams add_hwab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, int shift, int pairs);
OcfabParams add_ocfab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg);
WabParams add_wab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, WabKind kind,
                         const std::vector<int>& shifts, int pairs);

/// Tokens per triangular group, per rectangular window, and per unfold window.
int rect_tokens(const UnitConfig& cfg);
int tri_tokens(const UnitConfig& cfg);
int unfold_tokens(const UnitConfig& cfg);

template <typename S>
Var<S> cwab(Binder<S>& bind, const Var<S>& fm, const CwabParams& p, Padding padding = Padding::Zero);

template <typename S>
Var<S> rect_unit(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const UnitParams& p);
template <typename S>
Var<S> tri_unit(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const UnitParams& p);

/// Successive rect -> tri units at the HWAB's shift. With cfg.interval > 1
/// the map is split into interleaved sub-maps (stacked on the batch axis),
/// the units run on each sub-map, and the result is scattered back.
template <typename S>
Var<S> hwab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const HwabParams& p);

template <typename S>
Var<S> ocfab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const OcfabParams& p);

/// HWABs -> OCFAB -> 3x3 conv, plus the block residual.
template <typename S>
Var<S> wab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const WabParams& p);

}  // namespace cfat
