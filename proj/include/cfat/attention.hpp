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

#include "cfat/geometry.hpp"
#include "cfat/params.hpp"

#include <string>

namespace cfat {

/// Projections (C x C weights with biases) and a learned additive
/// q_tokens x kv_tokens position bias shared by all heads.
struct AttnParams {
  ParamId wq, bq, wk, bk, wv, bv, wo, bo, bias;
  int channels = 0;
  int heads = 1;
  int q_tokens = 0;
  int kv_tokens = 0;
};

AttnParams add_attention_params(ParamStore<double>& store, const std::string& prefix, int channels, int heads,
                                int q_tokens, int kv_tokens, Initializer& init, bool zero_output = false);

/// Fused multi-head attention over token groups.
///
/// q is G x Tq x C, k and v are G x Tkv x C, bias is Tq x Tkv. Channels are
/// split into `heads` slices of d = C / heads; per group and head the output
/// is softmax(q k^T / sqrt(d) + bias + mask) v. A non-empty mask must have
/// Tq == Tkv and is applied to group g as mask group g mod mask.groups().
template <typename S>
Var<S> window_attention(const Var<S>& q, const Var<S>& k, const Var<S>& v, const Var<S>& bias,
                        const AttentionMask& mask, int heads);

/// Self-attention on already partitioned tokens (G x T x C).
template <typename S>
Var<S> w_msa(Binder<S>& bind, const Var<S>& groups, const AttentionMask& mask, const AttnParams& p);

/// Partition a B x H x W x C map with `layout`, attend, and reverse.
template <typename S>
Var<S> window_msa(Binder<S>& bind, const Var<S>& fm, const WindowLayout& layout, const AttentionMask& mask,
                  const AttnParams& p);

/// Overlapping cross attention: queries from the R x R windows, keys and
/// values projected first and then unfolded into R0 x R0 windows (zero
/// border, or wrap-around with `wrap`).
template <typename S>
Var<S> ocfa(Binder<S>& bind, const Var<S>& fm, int window, double overlap, const AttnParams& p, bool wrap = false);

/// Plain weight tensors, used by the reference implementation.
struct AttnWeights {
  Tensor<double> wq, bq, wk, bk, wv, bv, wo, bo, bias;
  int heads = 1;
};

AttnWeights attention_weights(const ParamStore<double>& store, const AttnParams& p);

namespace oracle {

/// Window attention written with explicit loops over token pairs, in
/// double, sharing no code with window_attention. groups is G x T x C.
Tensor<double> naive_attention(const Tensor<double>& groups, const AttentionMask& mask, const AttnWeights& w);

/// Cross-attention variant: queries from q_groups (G x Tq x C), keys and
/// values from the already projected kv tensors (G x Tkv x C each).
Tensor<double> naive_cross_attention(const Tensor<double>& q_groups, const Tensor<double>& k_proj,
                                     const Tensor<double>& v_proj, const AttnWeights& w);

}  // namespace oracle

}  // namespace cfat
