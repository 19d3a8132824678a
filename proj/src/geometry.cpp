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

#include "cfat/geometry.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

namespace cfat {

const char* to_string(TriangleKind kind) {
  switch (kind) {
    case TriangleKind::Upper: return "upper";
    case TriangleKind::Right: return "right";
    case TriangleKind::Lower: return "lower";
    case TriangleKind::Left: return "left";
  }
  return "?";
}

TriangleKind tri_classify(int i, int j, int m) {
  require(m > 0 && m % 2 == 0, "tri_classify: square size must be positive and even, got " + std::to_string(m));
  require(i >= 0 && j >= 0 && i < m && j < m, "tri_classify: pixel outside the square");
  const int anti = i + j - (m - 1);
  if (i == j) return anti < 0 ? TriangleKind::Upper : TriangleKind::Lower;
  if (anti == 0) return i < j ? TriangleKind::Right : TriangleKind::Left;
  if (i < j) return anti < 0 ? TriangleKind::Upper : TriangleKind::Right;
  return anti > 0 ? TriangleKind::Lower : TriangleKind::Left;
}

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Rect: return "rect";
    case Scheme::Tri: return "tri";
    case Scheme::SparseRect: return "sparse-rect";
    case Scheme::SparseTri: return "sparse-tri";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "rect") return Scheme::Rect;
  if (name == "tri") return Scheme::Tri;
  if (name == "sparse-rect") return Scheme::SparseRect;
  if (name == "sparse-tri") return Scheme::SparseTri;
  throw InvalidArgument("unknown window scheme '" + name + "' (expected rect, tri, sparse-rect, sparse-tri)");
}

namespace {

// (kind, rank within kind) for every pixel of an m x m square, row-major.
std::vector<std::pair<int, int>> triangle_table(int m) {
  std::vector<std::pair<int, int>> table(static_cast<std::size_t>(m) * m);
  std::array<int, 4> next{0, 0, 0, 0};
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const int kind = static_cast<int>(tri_classify(a, b, m));
      table[static_cast<std::size_t>(a) * m + b] = {kind, next[kind]++};
    }
  }
  return table;
}

int positive_mod(int v, int n) { return ((v % n) + n) % n; }

}  // namespace

WindowLayout::WindowLayout(const LayoutSpec& spec) : spec_(spec) {
  const bool tri = is_tri(spec.scheme);
  const int I = is_sparse(spec.scheme) ? spec.interval : 1;
  require(I >= 1, "layout: interval must be >= 1");
  require(spec.window >= 1, "layout: window must be >= 1");
  require(!tri || spec.window % 2 == 0, "layout: triangular windows need an even square size");
  require(spec.shift >= 0, "layout: shift must be non-negative");
  require(spec.height > 0 && spec.width > 0, "layout: empty map");
  require(spec.height % (I * spec.window) == 0 && spec.width % (I * spec.window) == 0,
          "layout: " + std::to_string(spec.height) + "x" + std::to_string(spec.width) +
              " is not a multiple of interval*window = " + std::to_string(I * spec.window));
  spec_.interval = I;
  spec_.shift = spec.shift % spec.window;

  const int M = spec_.window, s = spec_.shift;
  const int h = spec_.height / I, w = spec_.width / I;
  const int squares = (h / M) * (w / M);
  const int groups_per_sub = tri ? 4 * squares : squares;
  tokens_ = tri ? M * M / 4 : M * M;
  groups_ = groups_per_sub * I * I;

  const auto table = tri ? triangle_table(M) : std::vector<std::pair<int, int>>{};
  const Index n = Index(spec_.height) * spec_.width;
  slot_of_pixel_.resize(static_cast<std::size_t>(n));
  pixel_of_slot_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < spec_.height; ++i) {
    for (int j = 0; j < spec_.width; ++j) {
      const int sub = (i % I) * I + (j % I);
      const int pi = positive_mod(i / I - s, h);
      const int pj = positive_mod(j / I - s, w);
      const int square = (pi / M) * (w / M) + pj / M;
      const int a = pi % M, b = pj % M;
      int g, t;
      if (tri) {
        const auto [kind, rank] = table[static_cast<std::size_t>(a) * M + b];
        g = square * 4 + kind;
        t = rank;
      } else {
        g = square;
        t = a * M + b;
      }
      g += sub * groups_per_sub;
      const Index slot = Index(g) * tokens_ + t;
      const Index pix = Index(i) * spec_.width + j;
      slot_of_pixel_[static_cast<std::size_t>(pix)] = slot;
      pixel_of_slot_[static_cast<std::size_t>(slot)] = pix;
    }
  }
}

WindowLayout WindowLayout::rect(int height, int width, int window, int shift, int interval) {
  return WindowLayout({interval > 1 ? Scheme::SparseRect : Scheme::Rect, window, shift, interval, height, width});
}

WindowLayout WindowLayout::tri(int height, int width, int window, int shift, int interval) {
  return WindowLayout({interval > 1 ? Scheme::SparseTri : Scheme::Tri, window, shift, interval, height, width});
}

WindowLayout::Slot WindowLayout::slot(int i, int j) const {
  require(i >= 0 && j >= 0 && i < spec_.height && j < spec_.width, "layout: pixel out of range");
  const Index s = slot_of_pixel_[static_cast<std::size_t>(Index(i) * spec_.width + j)];
  return {static_cast<int>(s / tokens_), static_cast<int>(s % tokens_)};
}

std::pair<int, int> WindowLayout::pixel(int group, int token) const {
  require(group >= 0 && token >= 0 && group < groups_ && token < tokens_, "layout: slot out of range");
  const Index p = pixel_of_slot_[static_cast<std::size_t>(Index(group) * tokens_ + token)];
  return {static_cast<int>(p / spec_.width), static_cast<int>(p % spec_.width)};
}

IndexList WindowLayout::partition_index(Index batch) const {
  const Index n = static_cast<Index>(pixel_of_slot_.size());
  auto idx = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(batch * n));
  for (Index b = 0; b < batch; ++b)
    for (Index k = 0; k < n; ++k) (*idx)[static_cast<std::size_t>(b * n + k)] = b * n + pixel_of_slot_[k];
  return idx;
}

IndexList WindowLayout::reverse_index(Index batch) const {
  const Index n = static_cast<Index>(slot_of_pixel_.size());
  auto idx = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(batch * n));
  for (Index b = 0; b < batch; ++b)
    for (Index k = 0; k < n; ++k) (*idx)[static_cast<std::size_t>(b * n + k)] = b * n + slot_of_pixel_[k];
  return idx;
}

bool WindowLayout::same_partition(const WindowLayout& other) const {
  if (slot_of_pixel_.size() != other.slot_of_pixel_.size()) return false;
  auto canonical = [](const WindowLayout& l) {
    std::unordered_map<Index, int> label;
    std::vector<int> out;
    out.reserve(l.slot_of_pixel_.size());
    for (Index s : l.slot_of_pixel_) {
      auto [it, inserted] = label.emplace(s / l.tokens_, static_cast<int>(label.size()));
      out.push_back(it->second);
    }
    return out;
  };
  return canonical(*this) == canonical(other);
}

ShiftModes shift_modes(int rect_window, int tri_window) {
  require(rect_window >= 2 && rect_window % 2 == 0, "shift_modes: rect window must be even");
  require(tri_window >= 2, "shift_modes: tri window must be positive");
  const int half = rect_window / 2;
  return {{0, half}, {0, half, 2 * half, 3 * half}};
}

// ---------------------------------------------------------------------------

AttentionMask::AttentionMask(int groups, int tokens, std::vector<int> region)
    : groups_(groups), tokens_(tokens), region_(std::move(region)) {
  require(region_.size() == static_cast<std::size_t>(groups) * tokens, "mask: region count mismatch");
}

bool AttentionMask::all_zero() const {
  if (empty()) return true;
  for (int g = 0; g < groups_; ++g)
    for (int t = 1; t < tokens_; ++t)
      if (region(g, t) != region(g, 0)) return false;
  return true;
}

template <typename S>
RowMatrix<S> AttentionMask::matrix(int group) const {
  if (empty()) return RowMatrix<S>::Zero(tokens_, tokens_);
  RowMatrix<S> m(tokens_, tokens_);
  for (int t = 0; t < tokens_; ++t)
    for (int u = 0; u < tokens_; ++u) m(t, u) = region(group, t) == region(group, u) ? S(0) : S(kMaskSentinel);
  return m;
}

template RowMatrix<float> AttentionMask::matrix<float>(int) const;
template RowMatrix<double> AttentionMask::matrix<double>(int) const;

AttentionMask band_mask(const WindowLayout& layout) {
  const auto& spec = layout.spec();
  const int I = spec.interval, M = spec.window, s = spec.shift;
  const int h = spec.height / I, w = spec.width / I;
  auto band = [M, s](int p, int n) { return p < n - M ? 0 : (p < n - s ? 1 : 2); };
  std::vector<int> region(static_cast<std::size_t>(layout.groups()) * layout.tokens());
  for (int i = 0; i < spec.height; ++i) {
    for (int j = 0; j < spec.width; ++j) {
      const int pi = positive_mod(i / I - s, h);
      const int pj = positive_mod(j / I - s, w);
      const Index slot = layout.slot_of_pixel()[static_cast<std::size_t>(Index(i) * spec.width + j)];
      region[static_cast<std::size_t>(slot)] = 3 * band(pi, h) + band(pj, w);
    }
  }
  return AttentionMask(layout.groups(), layout.tokens(), std::move(region));
}

AttentionMask shift_mask(const WindowLayout& layout) {
  if (layout.spec().shift == 0) return AttentionMask();
  return band_mask(layout);
}

// ---------------------------------------------------------------------------

namespace {

void require_map(const Shape& s, const char* op) {
  require(s.size() == 4, std::string(op) + ": expected a B x H x W x C map, got " + to_string(s));
}

template <typename S>
Tensor<S> gather(const Tensor<S>& src, const std::vector<Index>& rows, Shape out_shape) {
  const Index C = src.cols();
  Tensor<S> out(std::move(out_shape));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0) continue;
    std::copy(src.data() + rows[r] * C, src.data() + (rows[r] + 1) * C, out.data() + static_cast<Index>(r) * C);
  }
  return out;
}

}  // namespace

template <typename S>
TokenGroups<S> partition(const Tensor<S>& fm, const WindowLayout& layout) {
  require_map(fm.shape(), "partition");
  require(fm.dim(1) == layout.height() && fm.dim(2) == layout.width(), "partition: map size does not match layout");
  const Index B = fm.dim(0);
  auto idx = layout.partition_index(B);
  return {gather(fm, *idx, {B * layout.groups(), layout.tokens(), fm.dim(3)}), layout};
}

template <typename S>
Tensor<S> reverse(const TokenGroups<S>& groups) {
  const auto& l = groups.layout;
  const auto& d = groups.data;
  require(d.rank() == 3 && d.dim(1) == l.tokens() && d.dim(0) % l.groups() == 0,
          "reverse: token groups " + to_string(d.shape()) + " do not match the layout");
  const Index B = d.dim(0) / l.groups();
  auto idx = l.reverse_index(B);
  return gather(d, *idx, {B, l.height(), l.width(), d.dim(2)});
}

template <typename S>
TokenGroups<S> rect_partition(const Tensor<S>& fm, int window, int shift) {
  require_map(fm.shape(), "rect_partition");
  return partition(fm, WindowLayout::rect(static_cast<int>(fm.dim(1)), static_cast<int>(fm.dim(2)), window, shift));
}

template <typename S>
Tensor<S> rect_reverse(const TokenGroups<S>& groups) {
  require(!is_tri(groups.layout.spec().scheme), "rect_reverse: layout is triangular");
  return reverse(groups);
}

template <typename S>
TokenGroups<S> tri_partition(const Tensor<S>& fm, int window, int shift) {
  require_map(fm.shape(), "tri_partition");
  return partition(fm, WindowLayout::tri(static_cast<int>(fm.dim(1)), static_cast<int>(fm.dim(2)), window, shift));
}

template <typename S>
Tensor<S> tri_reverse(const TokenGroups<S>& groups) {
  require(is_tri(groups.layout.spec().scheme), "tri_reverse: layout is rectangular");
  return reverse(groups);
}

template <typename S>
Tensor<S> cyclic_shift(const Tensor<S>& fm, int dy, int dx) {
  require_map(fm.shape(), "cyclic_shift");
  const Index B = fm.dim(0), H = fm.dim(1), W = fm.dim(2);
  std::vector<Index> rows(static_cast<std::size_t>(B * H * W));
  for (Index b = 0; b < B; ++b)
    for (Index i = 0; i < H; ++i)
      for (Index j = 0; j < W; ++j) {
        const Index si = ((i - dy) % H + H) % H, sj = ((j - dx) % W + W) % W;
        rows[static_cast<std::size_t>((b * H + i) * W + j)] = (b * H + si) * W + sj;
      }
  return gather(fm, rows, fm.shape());
}

IndexList sparse_gather_index(Index batch, int height, int width, int interval) {
  require(interval >= 1, "sparse_gather: interval must be >= 1");
  require(height % interval == 0 && width % interval == 0,
          "sparse_gather: " + std::to_string(height) + "x" + std::to_string(width) + " not a multiple of interval " +
              std::to_string(interval));
  const int I = interval, h = height / I, w = width / I;
  auto idx = std::make_shared<std::vector<Index>>();
  idx->reserve(static_cast<std::size_t>(batch * height * width));
  for (Index b = 0; b < batch; ++b)
    for (int a = 0; a < I; ++a)
      for (int c = 0; c < I; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) idx->push_back((b * height + (y * I + a)) * width + (x * I + c));
  return idx;
}

IndexList sparse_scatter_index(Index batch, int height, int width, int interval) {
  const auto fwd = sparse_gather_index(batch, height, width, interval);
  auto idx = std::make_shared<std::vector<Index>>(fwd->size());
  for (std::size_t k = 0; k < fwd->size(); ++k) (*idx)[static_cast<std::size_t>((*fwd)[k])] = static_cast<Index>(k);
  return idx;
}

template <typename S>
std::vector<Tensor<S>> sparse_gather(const Tensor<S>& fm, int interval) {
  require_map(fm.shape(), "sparse_gather");
  const Index B = fm.dim(0), C = fm.dim(3);
  const int H = static_cast<int>(fm.dim(1)), W = static_cast<int>(fm.dim(2));
  const auto idx = sparse_gather_index(1, H, W, interval);
  const int I = interval;
  const Index sub_px = Index(H / I) * (W / I);
  std::vector<Tensor<S>> subs;
  for (int k = 0; k < I * I; ++k) {
    std::vector<Index> rows;
    rows.reserve(static_cast<std::size_t>(B * sub_px));
    for (Index b = 0; b < B; ++b)
      for (Index p = 0; p < sub_px; ++p) rows.push_back(b * H * W + (*idx)[static_cast<std::size_t>(k * sub_px + p)]);
    subs.push_back(gather(fm, rows, {B, H / I, W / I, C}));
  }
  return subs;
}

template <typename S>
Tensor<S> sparse_scatter(const std::vector<Tensor<S>>& subs, int interval) {
  const int I = interval;
  require(I >= 1 && subs.size() == static_cast<std::size_t>(I * I), "sparse_scatter: expected interval^2 sub-maps");
  const Shape& s0 = subs[0].shape();
  require_map(s0, "sparse_scatter");
  for (const auto& s : subs) require(s.shape() == s0, "sparse_scatter: sub-map shapes differ");
  const Index B = s0[0], h = s0[1], w = s0[2], C = s0[3];
  Tensor<S> out({B, h * I, w * I, C});
  for (int a = 0; a < I; ++a)
    for (int c = 0; c < I; ++c) {
      const Tensor<S>& sub = subs[static_cast<std::size_t>(a * I + c)];
      for (Index b = 0; b < B; ++b)
        for (Index y = 0; y < h; ++y)
          for (Index x = 0; x < w; ++x)
            for (Index ch = 0; ch < C; ++ch) out.at(b, y * I + a, x * I + c, ch) = sub.at(b, y, x, ch);
    }
  return out;
}

UnfoldGeometry unfold_geometry(int window, double overlap) {
  require(window >= 1, "overlap_unfold: window must be positive");
  require(overlap >= 0.0, "overlap_unfold: overlap constant must be non-negative");
  const double kr = overlap * window;
  const double half = kr / 2.0;
  require(std::abs(half - std::round(half)) < 1e-9,
          "overlap_unfold: k*R/2 = " + std::to_string(half) + " is not an integer");
  const int pad = static_cast<int>(std::lround(half));
  return {window, pad, window + 2 * pad};
}

IndexList unfold_index(Index batch, int height, int width, int window, double overlap, bool wrap) {
  const auto g = unfold_geometry(window, overlap);
  require(height % window == 0 && width % window == 0, "overlap_unfold: map size not a multiple of the window");
  const int gy = height / window, gx = width / window;
  auto idx = std::make_shared<std::vector<Index>>();
  idx->reserve(static_cast<std::size_t>(batch * gy * gx * g.extent * g.extent));
  for (Index b = 0; b < batch; ++b)
    for (int wy = 0; wy < gy; ++wy)
      for (int wx = 0; wx < gx; ++wx)
        for (int u = 0; u < g.extent; ++u)
          for (int v = 0; v < g.extent; ++v) {
            const int i = wy * window - g.padding + u;
            const int j = wx * window - g.padding + v;
            const bool inside = i >= 0 && j >= 0 && i < height && j < width;
            if (wrap) {
              idx->push_back((b * height + (i % height + height) % height) * width + (j % width + width) % width);
            } else {
              idx->push_back(inside ? (b * height + i) * width + j : Index(-1));
            }
          }
  return idx;
}

template <typename S>
Tensor<S> overlap_unfold(const Tensor<S>& fm, int window, double overlap) {
  require_map(fm.shape(), "overlap_unfold");
  const auto g = unfold_geometry(window, overlap);
  const int H = static_cast<int>(fm.dim(1)), W = static_cast<int>(fm.dim(2));
  const auto idx = unfold_index(fm.dim(0), H, W, window, overlap);
  const Index groups = fm.dim(0) * (H / window) * (W / window);
  return gather(fm, *idx, {groups, Index(g.extent) * g.extent, fm.dim(3)});
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  const int m = i % period;
  return m < n ? m : period - m;
}

}  // namespace

IndexList reflect_pad_index(Index batch, int height, int width, int height_out, int width_out) {
  require(height > 0 && width > 0 && height_out >= height && width_out >= width, "reflect_pad: invalid sizes");
  auto idx = std::make_shared<std::vector<Index>>();
  idx->reserve(static_cast<std::size_t>(batch * height_out * width_out));
  for (Index b = 0; b < batch; ++b)
    for (int i = 0; i < height_out; ++i)
      for (int j = 0; j < width_out; ++j) idx->push_back((b * height + reflect(i, height)) * width + reflect(j, width));
  return idx;
}

IndexList crop_index(Index batch, int height, int width, int height_out, int width_out) {
  require(height_out <= height && width_out <= width && height_out > 0 && width_out > 0, "crop: invalid sizes");
  auto idx = std::make_shared<std::vector<Index>>();
  idx->reserve(static_cast<std::size_t>(batch * height_out * width_out));
  for (Index b = 0; b < batch; ++b)
    for (int i = 0; i < height_out; ++i)
      for (int j = 0; j < width_out; ++j) idx->push_back((b * height + i) * width + j);
  return idx;
}

#define CFAT_INSTANTIATE_GEOMETRY(S)                                               \
  template TokenGroups<S> partition(const Tensor<S>&, const WindowLayout&);        \
  template Tensor<S> reverse(const TokenGroups<S>&);                               \
  template TokenGroups<S> rect_partition(const Tensor<S>&, int, int);              \
  template Tensor<S> rect_reverse(const TokenGroups<S>&);                          \
  template TokenGroups<S> tri_partition(const Tensor<S>&, int, int);               \
  template Tensor<S> tri_reverse(const TokenGroups<S>&);                           \
  template Tensor<S> cyclic_shift(const Tensor<S>&, int, int);                     \
  template std::vector<Tensor<S>> sparse_gather(const Tensor<S>&, int);            \
  template Tensor<S> sparse_scatter(const std::vector<Tensor<S>>&, int);           \
  template Tensor<S> overlap_unfold(const Tensor<S>&, int, double);

CFAT_INSTANTIATE_GEOMETRY(float)
CFAT_INSTANTIATE_GEOMETRY(double)

}  // namespace cfat
