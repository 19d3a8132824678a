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

#include "cfat/blocks.hpp"

#include <cmath>

namespace cfat {

void UnitConfig::validate() const {
  require(channels > 0 && heads > 0 && channels % heads == 0, "unit: channels must be divisible by heads");
  require(rect_window > 0 && rect_window % 2 == 0, "unit: rect window must be positive and even");
  require(tri_window == 2 * rect_window, "unit: tri window must be twice the rect window");
  require(shift >= 0, "unit: shift must be non-negative");
  require(interval >= 1, "unit: interval must be >= 1");
  require(alpha >= 0.0 && beta >= 0.0, "unit: alpha and beta must be non-negative");
  require(mlp_ratio >= 1, "unit: mlp ratio must be >= 1");
  require(se_squeeze >= 1 && channels % se_squeeze == 0, "unit: channels must be divisible by the squeeze factor");
  unfold_geometry(rect_window, overlap);
}

int rect_tokens(const UnitConfig& cfg) { return cfg.rect_window * cfg.rect_window; }
int tri_tokens(const UnitConfig& cfg) { return cfg.tri_window * cfg.tri_window / 4; }
int unfold_tokens(const UnitConfig& cfg) {
  const int e = unfold_geometry(cfg.rect_window, cfg.overlap).extent;
  return e * e;
}

namespace {

// Conv weights follow the common kaiming-uniform(a = sqrt 5) default,
// i.e. U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor<double> conv_weight(BlockInit& b, Shape shape, Index fan_in, bool zero) {
  if (zero) return Initializer::zeros(std::move(shape));
  return b.init.uniform(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

}  // namespace

LayerNormParams add_layer_norm_params(BlockInit& b, const std::string& prefix, int channels) {
  return {b.store.add(prefix + ".gamma", Initializer::ones({channels})),
          b.store.add(prefix + ".beta", Initializer::zeros({channels}))};
}

MlpParams add_mlp_params(BlockInit& b, const std::string& prefix, int channels, int hidden) {
  MlpParams p;
  p.w1 = b.store.add(prefix + ".fc1.w", b.init.trunc_normal({channels, hidden}, 0.02));
  p.b1 = b.store.add(prefix + ".fc1.b", Initializer::zeros({hidden}));
  p.w2 = b.store.add(prefix + ".fc2.w",
                     b.zero_residual ? Initializer::zeros({hidden, channels}) : b.init.trunc_normal({hidden, channels}, 0.02));
  p.b2 = b.store.add(prefix + ".fc2.b", Initializer::zeros({channels}));
  return p;
}

CwabParams add_cwab_params(BlockInit& b, const std::string& prefix, int channels, int squeeze) {
  const Index C = channels, R = channels / squeeze;
  CwabParams p;
  p.dw1_w = b.store.add(prefix + ".dw1.w", conv_weight(b, {9, C}, 9, false));
  p.dw1_b = b.store.add(prefix + ".dw1.b", Initializer::zeros({C}));
  p.pw1_w = b.store.add(prefix + ".pw1.w", conv_weight(b, {C, C}, C, false));
  p.pw1_b = b.store.add(prefix + ".pw1.b", Initializer::zeros({C}));
  p.dw2_w = b.store.add(prefix + ".dw2.w", conv_weight(b, {9, C}, 9, false));
  p.dw2_b = b.store.add(prefix + ".dw2.b", Initializer::zeros({C}));
  p.pw2_w = b.store.add(prefix + ".pw2.w", conv_weight(b, {C, C}, C, b.zero_residual));
  p.pw2_b = b.store.add(prefix + ".pw2.b", Initializer::zeros({C}));
  p.se1_w = b.store.add(prefix + ".se1.w", b.init.trunc_normal({C, R}, 0.02));
  p.se1_b = b.store.add(prefix + ".se1.b", Initializer::zeros({R}));
  p.se2_w = b.store.add(prefix + ".se2.w", b.init.trunc_normal({R, C}, 0.02));
  p.se2_b = b.store.add(prefix + ".se2.b", Initializer::zeros({C}));
  return p;
}

UnitParams add_unit_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, UnitKind kind) {
  const int tokens = kind == UnitKind::Rect ? rect_tokens(cfg) : tri_tokens(cfg);
  UnitParams p;
  p.kind = kind;
  p.ln1 = add_layer_norm_params(b, prefix + ".ln1", cfg.channels);
  p.attn = add_attention_params(b.store, prefix + ".attn", cfg.channels, cfg.heads, tokens, tokens, b.init,
                                b.zero_residual);
  if (cfg.use_cwab) p.cwab = add_cwab_params(b, prefix + ".cwab", cfg.channels, cfg.se_squeeze);
  p.ln2 = add_layer_norm_params(b, prefix + ".ln2", cfg.channels);
  p.mlp = add_mlp_params(b, prefix + ".mlp", cfg.channels, cfg.channels * cfg.mlp_ratio);
  return p;
}

HwabParams add_hwab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, int shift, int pairs) {
  require(pairs >= 1, "hwab: at least one rect/tri pair is required");
  HwabParams p;
  p.shift = shift;
  for (int i = 0; i < pairs; ++i) {
    p.units.push_back(add_unit_params(b, prefix + ".pair" + std::to_string(i) + ".rect", cfg, UnitKind::Rect));
    p.units.push_back(add_unit_params(b, prefix + ".pair" + std::to_string(i) + ".tri", cfg, UnitKind::Tri));
  }
  return p;
}

OcfabParams add_ocfab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg) {
  OcfabParams p;
  p.ln1 = add_layer_norm_params(b, prefix + ".ln1", cfg.channels);
  p.attn = add_attention_params(b.store, prefix + ".attn", cfg.channels, cfg.heads, rect_tokens(cfg),
                                unfold_tokens(cfg), b.init, b.zero_residual);
  p.ln2 = add_layer_norm_params(b, prefix + ".ln2", cfg.channels);
  p.mlp = add_mlp_params(b, prefix + ".mlp", cfg.channels, cfg.channels * cfg.mlp_ratio);
  return p;
}

WabParams add_wab_params(BlockInit& b, const std::string& prefix, const UnitConfig& cfg, WabKind kind,
                         const std::vector<int>& shifts, int pairs) {
  const Index C = cfg.channels;
  WabParams p;
  p.kind = kind;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    p.hwabs.push_back(add_hwab_params(b, prefix + ".hwab" + std::to_string(i), cfg, shifts[i], pairs));
  }
  p.ocfab = add_ocfab_params(b, prefix + ".ocfab", cfg);
  p.conv_w = b.store.add(prefix + ".conv.w", conv_weight(b, {9 * C, C}, 9 * C, b.zero_residual));
  p.conv_b = b.store.add(prefix + ".conv.b", Initializer::zeros({C}));
  return p;
}

// ---------------------------------------------------------------------------

template <typename S>
Var<S> cwab(Binder<S>& bind, const Var<S>& fm, const CwabParams& p, Padding padding) {
  Var<S> y = depthwise_conv2d(fm, bind(p.dw1_w), bind(p.dw1_b), 3, padding);
  y = linear(y, bind(p.pw1_w), bind(p.pw1_b));
  y = gelu(y);
  y = depthwise_conv2d(y, bind(p.dw2_w), bind(p.dw2_b), 3, padding);
  y = linear(y, bind(p.pw2_w), bind(p.pw2_b));
  Var<S> s = mean_pool(y);
  s = gelu(linear(s, bind(p.se1_w), bind(p.se1_b)));
  s = sigmoid(linear(s, bind(p.se2_w), bind(p.se2_b)));
  return channel_scale(y, s);
}

namespace {

template <typename S>
Var<S> transformer_unit(Binder<S>& bind, const Var<S>& fm, const UnitParams& p, const WindowLayout& layout,
                        double weight, bool circular) {
  const Var<S> x1 = layer_norm(fm, bind(p.ln1.gamma), bind(p.ln1.beta));
  const AttentionMask mask = circular ? AttentionMask() : shift_mask(layout);
  Var<S> inter = add(window_msa(bind, x1, layout, mask, p.attn), fm);
  if (p.cwab && weight != 0.0) {
    const Padding pad = circular ? Padding::Circular : Padding::Zero;
    inter = add(inter, scale(cwab(bind, x1, *p.cwab, pad), static_cast<S>(weight)));
  }
  const Var<S> x2 = layer_norm(inter, bind(p.ln2.gamma), bind(p.ln2.beta));
  return add(mlp(x2, bind(p.mlp.w1), bind(p.mlp.b1), bind(p.mlp.w2), bind(p.mlp.b2)), inter);
}

}  // namespace

template <typename S>
Var<S> rect_unit(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const UnitParams& p) {
  require(p.kind == UnitKind::Rect, "rect_unit: parameters belong to a triangular unit");
  require(fm.value().rank() == 4, "rect_unit: expected a B x H x W x C map");
  const auto layout = WindowLayout::rect(static_cast<int>(fm.value().dim(1)), static_cast<int>(fm.value().dim(2)),
                                         cfg.rect_window, rect_shift(cfg.shift, cfg.rect_window));
  return transformer_unit(bind, fm, p, layout, cfg.alpha, cfg.circular);
}

template <typename S>
Var<S> tri_unit(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const UnitParams& p) {
  require(p.kind == UnitKind::Tri, "tri_unit: parameters belong to a rectangular unit");
  require(fm.value().rank() == 4, "tri_unit: expected a B x H x W x C map");
  const auto layout = WindowLayout::tri(static_cast<int>(fm.value().dim(1)), static_cast<int>(fm.value().dim(2)),
                                        cfg.tri_window, cfg.shift);
  return transformer_unit(bind, fm, p, layout, cfg.beta, cfg.circular);
}

template <typename S>
Var<S> hwab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const HwabParams& p) {
  require(fm.value().rank() == 4, "hwab: expected a B x H x W x C map");
  UnitConfig unit = cfg;
  unit.shift = p.shift;
  const Index B = fm.value().dim(0), C = fm.value().dim(3);
  const int H = static_cast<int>(fm.value().dim(1)), W = static_cast<int>(fm.value().dim(2));
  const int I = cfg.interval;
  Var<S> x = fm;
  if (I > 1) x = gather_rows(fm, sparse_gather_index(B, H, W, I), {B * I * I, H / I, W / I, C});
  for (const UnitParams& u : p.units) {
    x = u.kind == UnitKind::Rect ? rect_unit(bind, x, unit, u) : tri_unit(bind, x, unit, u);
  }
  if (I > 1) x = gather_rows(x, sparse_scatter_index(B, H, W, I), fm.shape());
  return x;
}

template <typename S>
Var<S> ocfab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const OcfabParams& p) {
  const Var<S> x1 = layer_norm(fm, bind(p.ln1.gamma), bind(p.ln1.beta));
  const Var<S> inter = add(ocfa(bind, x1, cfg.rect_window, cfg.overlap, p.attn, cfg.circular), fm);
  const Var<S> x2 = layer_norm(inter, bind(p.ln2.gamma), bind(p.ln2.beta));
  return add(mlp(x2, bind(p.mlp.w1), bind(p.mlp.b1), bind(p.mlp.w2), bind(p.mlp.b2)), inter);
}

template <typename S>
Var<S> wab(Binder<S>& bind, const Var<S>& fm, const UnitConfig& cfg, const WabParams& p) {
  UnitConfig unit = cfg;
  if (p.kind == WabKind::Dense) unit.interval = 1;
  Var<S> x = fm;
  for (const HwabParams& h : p.hwabs) x = hwab(bind, x, unit, h);
  x = ocfab(bind, x, cfg, p.ocfab);
  x = conv2d(x, bind(p.conv_w), bind(p.conv_b), 3, cfg.circular ? Padding::Circular : Padding::Zero);
  return add(x, fm);
}

#define CFAT_INSTANTIATE_BLOCKS(S)                                                                \
  template Var<S> cwab(Binder<S>&, const Var<S>&, const CwabParams&, Padding);                    \
  template Var<S> rect_unit(Binder<S>&, const Var<S>&, const UnitConfig&, const UnitParams&);     \
  template Var<S> tri_unit(Binder<S>&, const Var<S>&, const UnitConfig&, const UnitParams&);      \
  template Var<S> hwab(Binder<S>&, const Var<S>&, const UnitConfig&, const HwabParams&);          \
  template Var<S> ocfab(Binder<S>&, const Var<S>&, const UnitConfig&, const OcfabParams&);        \
  template Var<S> wab(Binder<S>&, const Var<S>&, const UnitConfig&, const WabParams&);

CFAT_INSTANTIATE_BLOCKS(float)
CFAT_INSTANTIATE_BLOCKS(double)

}  // namespace cfat
