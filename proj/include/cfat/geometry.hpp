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

#include "cfat/ops.hpp"
#include "cfat/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cfat {

// ---------------------------------------------------------------------------
// Triangles

enum class TriangleKind : int { Upper = 0, Right = 1, Lower = 2, Left = 3 };

const char* to_string(TriangleKind kind);

/// Which of the four diagonal-cut triangles of an m x m square pixel (i, j)
/// belongs to. Pixels on the main diagonal go to Upper/Lower and pixels on
/// the anti-diagonal to Right/Left, so every triangle holds m*m/4 pixels.
TriangleKind tri_classify(int i, int j, int m);

// ---------------------------------------------------------------------------
// Layouts

enum class Scheme { Rect, Tri, SparseRect, SparseTri };

const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);
inline bool is_sparse(Scheme s) { return s == Scheme::SparseRect || s == Scheme::SparseTri; }
inline bool is_tri(Scheme s) { return s == Scheme::Tri || s == Scheme::SparseTri; }

struct LayoutSpec {
  Scheme scheme = Scheme::Rect;
  int window = 8;    // square side M in pixels
  int shift = 0;     // cyclic shift s; stored reduced mod M
  int interval = 1;  // sparse interval I (1 for dense schemes)
  int height = 0;
  int width = 0;

  bool operator==(const LayoutSpec&) const = default;
};

/// Bijection pixel (i, j) <-> (group g, token t) for one partition scheme.
///
/// The map is built in three steps: sparse schemes first split the map into
/// I*I interleaved sub-grids (sub-grid a*I + b holds pixels with i = a and
/// j = b mod I); each (sub-)map is cyclically shifted by (-s, -s); the
/// shifted map is tiled into M x M squares, each square being one group
/// (rect) or four groups in TriangleKind order (tri). Tokens are the
/// row-major scan of a group's pixels.
class WindowLayout {
 public:
  struct Slot {
    int group;
    int token;
    bool operator==(const Slot&) const = default;
  };

  explicit WindowLayout(const LayoutSpec& spec);

  static WindowLayout rect(int height, int width, int window, int shift, int interval = 1);
  static WindowLayout tri(int height, int width, int window, int shift, int interval = 1);

  const LayoutSpec& spec() const { return spec_; }
  int height() const { return spec_.height; }
  int width() const { return spec_.width; }
  int groups() const { return groups_; }
  int tokens() const { return tokens_; }

  Slot slot(int i, int j) const;
  std::pair<int, int> pixel(int group, int token) const;

  /// Flat pixel index i*W + j of slot g*T + t.
  const std::vector<Index>& pixel_of_slot() const { return pixel_of_slot_; }
  /// Flat slot index g*T + t of pixel i*W + j.
  const std::vector<Index>& slot_of_pixel() const { return slot_of_pixel_; }

  /// Row indices for gather_rows: B x H x W x C -> (B*G) x T x C and back.
  IndexList partition_index(Index batch) const;
  IndexList reverse_index(Index batch) const;

  /// Same pixel -> (group, token) map.
  bool operator==(const WindowLayout& other) const { return slot_of_pixel_ == other.slot_of_pixel_; }
  /// Same set partition of the pixels, ignoring group labels and token order.
  bool same_partition(const WindowLayout& other) const;

 private:
  LayoutSpec spec_;
  int groups_ = 0;
  int tokens_ = 0;
  std::vector<Index> pixel_of_slot_;
  std::vector<Index> slot_of_pixel_;
};

struct ShiftModes {
  std::vector<int> rect;
  std::vector<int> tri;
};

/// Canonical unique shifts: rect {0, M_rect/2}; tri {0, 1, 2, 3} * M_rect/2.
ShiftModes shift_modes(int rect_window, int tri_window);

/// Shift used by a rectangular unit inside a block whose schedule shift is s.
inline int rect_shift(int s, int rect_window) { return s % rect_window; }

// ---------------------------------------------------------------------------
// Masks

/// Per-group T x T additive mask for shifted layouts, stored as one region
/// id per slot: tokens of one group may attend to each other iff their
/// region ids agree. A default-constructed mask masks nothing.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(int groups, int tokens, std::vector<int> region);

  bool empty() const { return region_.empty(); }
  int groups() const { return groups_; }
  int tokens() const { return tokens_; }
  int region(int group, int token) const { return region_[static_cast<std::size_t>(group) * tokens_ + token]; }
  bool allowed(int group, int t, int u) const { return empty() || region(group, t) == region(group, u); }
  bool all_zero() const;

  /// Dense T x T mask of one group with entries 0 or kMaskSentinel.
  template <typename S>
  RowMatrix<S> matrix(int group) const;

  const std::vector<int>& regions() const { return region_; }

 private:
  int groups_ = 0;
  int tokens_ = 0;
  std::vector<int> region_;
};

/// Region-id band masking: in the shifted frame, rows are split at h - M and
/// h - s (same for columns), giving up to nine regions; wrapped-around pixels
/// never share a region with pixels that were not wrapped. Empty for s = 0.
AttentionMask shift_mask(const WindowLayout& layout);

/// Band construction applied unconditionally, including s = 0.
AttentionMask band_mask(const WindowLayout& layout);

// ---------------------------------------------------------------------------
// Pure tensor transforms

template <typename S>
struct TokenGroups {
  Tensor<S> data;  // (B*G) x T x C
  WindowLayout layout;
};

template <typename S>
TokenGroups<S> partition(const Tensor<S>& fm, const WindowLayout& layout);
template <typename S>
Tensor<S> reverse(const TokenGroups<S>& groups);

template <typename S>
TokenGroups<S> rect_partition(const Tensor<S>& fm, int window, int shift);
template <typename S>
Tensor<S> rect_reverse(const TokenGroups<S>& groups);
template <typename S>
TokenGroups<S> tri_partition(const Tensor<S>& fm, int window, int shift);
template <typename S>
Tensor<S> tri_reverse(const TokenGroups<S>& groups);

/// torch.roll semantics: out(i, j) = in(i - dy mod H, j - dx mod W).
template <typename S>
Tensor<S> cyclic_shift(const Tensor<S>& fm, int dy, int dx);

/// I*I sub-maps; sub-map a*I + b holds pixels (i, j) with i = a, j = b mod I.
template <typename S>
std::vector<Tensor<S>> sparse_gather(const Tensor<S>& fm, int interval);
template <typename S>
Tensor<S> sparse_scatter(const std::vector<Tensor<S>>& subs, int interval);

/// Stacks the sub-maps along the batch axis: B x H x W -> (B*I*I) x H/I x W/I,
/// batch entry b*I*I + a*I + c.
IndexList sparse_gather_index(Index batch, int height, int width, int interval);
IndexList sparse_scatter_index(Index batch, int height, int width, int interval);

struct UnfoldGeometry {
  int window;    // R
  int padding;   // k*R/2
  int extent;    // R0 = (1+k) R
};

UnfoldGeometry unfold_geometry(int window, double overlap);

/// Zero-pads by k*R/2 and extracts the H*W/R^2 windows of R0 x R0 at
/// stride R. Result (B*G) x R0^2 x C; window order matches rect_partition
/// with s = 0.
template <typename S>
Tensor<S> overlap_unfold(const Tensor<S>& fm, int window, double overlap);
/// With `wrap` the border is taken from the opposite edge instead of zeros.
IndexList unfold_index(Index batch, int height, int width, int window, double overlap, bool wrap = false);

/// Extends a map to height_out x width_out with mirror reflection at the
/// bottom and right edges (edge pixel not repeated), folding repeatedly if
/// the border exceeds the image.
IndexList reflect_pad_index(Index batch, int height, int width, int height_out, int width_out);
/// Keeps the top-left height_out x width_out region.
IndexList crop_index(Index batch, int height, int width, int height_out, int width_out);

}  // namespace cfat
