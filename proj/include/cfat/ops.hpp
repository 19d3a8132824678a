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

#include "cfat/autograd.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace cfat {

/// Additive pre-softmax value for forbidden attention pairs.
inline constexpr double kMaskSentinel = -1.0e4;

/// Running multiply-accumulate count of the matrix-product style primitives
/// on this thread (linear, convolutions, attention products).
std::uint64_t& mac_counter();

class MacScope {
 public:
  MacScope() : start_(mac_counter()) {}
  std::uint64_t count() const { return mac_counter() - start_; }

 private:
  std::uint64_t start_;
};

using IndexList = std::shared_ptr<const std::vector<Index>>;

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b);
template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b);
template <typename S>
Var<S> scale(const Var<S>& a, S factor);
template <typename S>
Var<S> reshape(const Var<S>& a, Shape shape);
template <typename S>
Var<S> sum(const Var<S>& a);

/// x (.. x C_in) * w (C_in x C_out) + b (C_out), applied to every token.
template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b);

/// Per-token normalization over the last axis, then affine.
template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps = S(1e-5));

/// Exact GELU, x * Phi(x).
template <typename S>
Var<S> gelu(const Var<S>& x);
template <typename S>
Var<S> sigmoid(const Var<S>& x);

/// linear(C -> hidden), GELU, linear(hidden -> C).
template <typename S>
Var<S> mlp(const Var<S>& x, const Var<S>& w1, const Var<S>& b1, const Var<S>& w2, const Var<S>& b2);

/// Output row i is input row index[i] (viewing both as rows of the last
/// axis); an index of -1 yields a zero row. Every permutation, window
/// partition, padding and crop in the model goes through this op.
template <typename S>
Var<S> gather_rows(const Var<S>& x, IndexList index, Shape out_shape);

/// Border handling of the convolutions: zeros, or wrap-around (torus).
enum class Padding { Zero, Circular };

/// Cross-correlation with stride 1 and (k-1)/2 padding on a
/// B x H x W x C_in map. `w` is (k*k*C_in) x C_out with row
/// (dy*k + dx)*C_in + ci.
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int k, Padding padding = Padding::Zero);

/// One k x k filter per channel; `w` is (k*k) x C.
template <typename S>
Var<S> depthwise_conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int k,
                        Padding padding = Padding::Zero);

/// Depth-to-space: channel c*r*r + i*r + j of pixel (h, w) moves to channel c
/// of pixel (h*r + i, w*r + j).
template <typename S>
Var<S> pixel_shuffle(const Var<S>& x, int r);

/// Inverse of pixel_shuffle on plain tensors.
template <typename S>
Tensor<S> pixel_unshuffle(const Tensor<S>& x, int r);

/// Global average over H x W: B x H x W x C -> B x C.
template <typename S>
Var<S> mean_pool(const Var<S>& x);

/// x (B x H x W x C) scaled by s (B x C) per batch and channel.
template <typename S>
Var<S> channel_scale(const Var<S>& x, const Var<S>& s);

/// Mean absolute error against a fixed target.
template <typename S>
Var<S> l1_loss(const Var<S>& pred, const Tensor<S>& target);

/// Row-wise softmax of logits + mask (mask may be null).
template <typename S>
RowMatrix<S> softmax_masked(const RowMatrix<S>& logits, const RowMatrix<S>* mask = nullptr);

}  // namespace cfat
