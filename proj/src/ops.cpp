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

#include "cfat/ops.hpp"

#include <cmath>

namespace cfat {

std::uint64_t& mac_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace {

void count_macs(Index n) { mac_counter() += static_cast<std::uint64_t>(n); }

template <typename S>
Shape with_last(Shape shape, Index last) {
  shape.back() = last;
  return shape;
}

void require_rank4(const Shape& s, const char* op) {
  require(s.size() == 4, std::string(op) + ": expected a B x H x W x C map, got " + to_string(s));
}

// Source coordinate for a tap, or -1 when it falls in the zero border.
Index tap_coord(Index p, Index n, Padding padding) {
  if (p >= 0 && p < n) return p;
  if (padding == Padding::Zero) return -1;
  return ((p % n) + n) % n;
}

// B*H*W x (k*k*C) patch matrix.
template <typename S>
RowMatrix<S> im2col(const Tensor<S>& x, int k, Padding padding) {
  const Index B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const int pad = (k - 1) / 2;
  RowMatrix<S> col = RowMatrix<S>::Zero(B * H * W, Index(k) * k * C);
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < H; ++h) {
      for (Index w = 0; w < W; ++w) {
        S* row = col.data() + ((b * H + h) * W + w) * col.cols();
        for (int dy = 0; dy < k; ++dy) {
          const Index sh = tap_coord(h + dy - pad, H, padding);
          if (sh < 0) continue;
          for (int dx = 0; dx < k; ++dx) {
            const Index sw = tap_coord(w + dx - pad, W, padding);
            if (sw < 0) continue;
            const S* src = x.data() + ((b * H + sh) * W + sw) * C;
            std::copy(src, src + C, row + (dy * k + dx) * C);
          }
        }
      }
    }
  }
  return col;
}

template <typename S>
void col2im_add(const RowMatrix<S>& col, Tensor<S>& dx, int k, Padding padding) {
  const Index B = dx.dim(0), H = dx.dim(1), W = dx.dim(2), C = dx.dim(3);
  const int pad = (k - 1) / 2;
  for (Index b = 0; b < B; ++b) {
    for (Index h = 0; h < H; ++h) {
      for (Index w = 0; w < W; ++w) {
        const S* row = col.data() + ((b * H + h) * W + w) * col.cols();
        for (int dy = 0; dy < k; ++dy) {
          const Index sh = tap_coord(h + dy - pad, H, padding);
          if (sh < 0) continue;
          for (int dxo = 0; dxo < k; ++dxo) {
            const Index sw = tap_coord(w + dxo - pad, W, padding);
            if (sw < 0) continue;
            Eigen::Map<Vector<S>>(dx.data() + ((b * H + sh) * W + sw) * C, C) +=
                Eigen::Map<const Vector<S>>(row + (dy * k + dxo) * C, C);
          }
        }
      }
    }
  }
}

template <typename S>
S normal_cdf(S x) {
  return S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2))));
}

template <typename S>
S normal_pdf(S x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return S(kInvSqrt2Pi) * std::exp(S(-0.5) * x * x);
}

}  // namespace

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<S> out(a.shape(), a.value().values() + b.value().values());
  return make_result<S>(std::move(out), {&a, &b}, [na = a.node(), nb = b.node()] {
    return [na, nb](const Tensor<S>& g) {
      accumulate(na, g.values());
      accumulate(nb, g.values());
    };
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch");
  Tensor<S> out(a.shape(), a.value().values() - b.value().values());
  return make_result<S>(std::move(out), {&a, &b}, [na = a.node(), nb = b.node()] {
    return [na, nb](const Tensor<S>& g) {
      accumulate(na, g.values());
      if (nb->requires_grad) nb->grad_ref().values() -= g.values();
    };
  });
}

template <typename S>
Var<S> scale(const Var<S>& a, S factor) {
  Tensor<S> out(a.shape(), a.value().values() * factor);
  return make_result<S>(std::move(out), {&a}, [na = a.node(), factor] {
    return [na, factor](const Tensor<S>& g) { accumulate<S>(na, g.values() * factor); };
  });
}

template <typename S>
Var<S> reshape(const Var<S>& a, Shape shape) {
  Tensor<S> out = a.value().reshaped(std::move(shape));
  return make_result<S>(std::move(out), {&a}, [na = a.node()] {
    return [na](const Tensor<S>& g) { accumulate(na, g.values()); };
  });
}

template <typename S>
Var<S> sum(const Var<S>& a) {
  Tensor<S> out = Tensor<S>::constant({1}, a.value().values().sum());
  return make_result<S>(std::move(out), {&a}, [na = a.node()] {
    return [na](const Tensor<S>& g) {
      if (na->requires_grad) na->grad_ref().values().array() += g[0];
    };
  });
}

template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  const Index cin = x.value().cols();
  require(w.value().rank() == 2 && w.value().dim(0) == cin,
          "linear: weight " + to_string(w.shape()) + " does not accept input " + to_string(x.shape()));
  const Index cout = w.value().dim(1);
  require(b.value().size() == cout, "linear: bias size mismatch");
  Tensor<S> out(with_last<S>(x.shape(), cout));
  out.matrix().noalias() = x.value().matrix() * w.value().matrix();
  out.matrix().rowwise() += b.value().values().transpose();
  count_macs(x.value().rows() * cin * cout);
  return make_result<S>(std::move(out), {&x, &w, &b}, [nx = x.node(), nw = w.node(), nb = b.node()] {
    return [nx, nw, nb](const Tensor<S>& g) {
      const auto gm = g.matrix();
      if (nx->requires_grad) nx->grad_ref().matrix().noalias() += gm * nw->value.matrix().transpose();
      if (nw->requires_grad) nw->grad_ref().matrix().noalias() += nx->value.matrix().transpose() * gm;
      if (nb->requires_grad) nb->grad_ref().values() += gm.colwise().sum().transpose();
      count_macs(2 * gm.rows() * nw->value.dim(0) * nw->value.dim(1));
    };
  });
}

template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps) {
  const Index C = x.value().cols();
  require(gamma.value().size() == C && beta.value().size() == C, "layer_norm: affine size mismatch");
  const Index N = x.value().rows();
  auto xhat = std::make_shared<RowMatrix<S>>(N, C);
  auto inv_std = std::make_shared<Vector<S>>(N);
  const auto xm = x.value().matrix();
  for (Index r = 0; r < N; ++r) {
    const S mean = xm.row(r).mean();
    const S var = (xm.row(r).array() - mean).square().mean();
    (*inv_std)[r] = S(1) / std::sqrt(var + eps);
    xhat->row(r) = (xm.row(r).array() - mean) * (*inv_std)[r];
  }
  Tensor<S> out(x.shape());
  out.matrix() = (xhat->array().rowwise() * gamma.value().values().transpose().array()).rowwise() +
                 beta.value().values().transpose().array();
  return make_result<S>(std::move(out), {&x, &gamma, &beta},
                        [nx = x.node(), ng = gamma.node(), nb = beta.node(), xhat, inv_std] {
                          return [nx, ng, nb, xhat, inv_std](const Tensor<S>& g) {
                            const auto gm = g.matrix();
                            if (ng->requires_grad) {
                              ng->grad_ref().values() += (gm.array() * xhat->array()).colwise().sum().transpose().matrix();
                            }
                            if (nb->requires_grad) nb->grad_ref().values() += gm.colwise().sum().transpose();
                            if (!nx->requires_grad) return;
                            RowMatrix<S> dxhat = gm.array().rowwise() * ng->value.values().transpose().array();
                            auto dx = nx->grad_ref().matrix();
                            for (Index r = 0; r < dxhat.rows(); ++r) {
                              const S m1 = dxhat.row(r).mean();
                              const S m2 = (dxhat.row(r).array() * xhat->row(r).array()).mean();
                              dx.row(r).array() +=
                                  (*inv_std)[r] * (dxhat.row(r).array() - m1 - xhat->row(r).array() * m2);
                            }
                          };
                        });
}

template <typename S>
Var<S> gelu(const Var<S>& x) {
  Tensor<S> out(x.shape());
  const auto& xv = x.value().values();
  for (Index i = 0; i < xv.size(); ++i) out[i] = xv[i] * normal_cdf(xv[i]);
  return make_result<S>(std::move(out), {&x}, [nx = x.node()] {
    return [nx](const Tensor<S>& g) {
      if (!nx->requires_grad) return;
      const auto& xv = nx->value.values();
      auto& dx = nx->grad_ref().values();
      for (Index i = 0; i < xv.size(); ++i) dx[i] += g[i] * (normal_cdf(xv[i]) + xv[i] * normal_pdf(xv[i]));
    };
  });
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  Tensor<S> out(x.shape(), (S(1) / (S(1) + (-x.value().values().array()).exp())).matrix());
  return make_result<S>(std::move(out), {&x}, [nx = x.node()](const Node<S>* self) {
    return [nx, self](const Tensor<S>& g) {
      if (!nx->requires_grad) return;
      const auto y = self->value.values().array();
      nx->grad_ref().values().array() += g.values().array() * y * (S(1) - y);
    };
  });
}

template <typename S>
Var<S> mlp(const Var<S>& x, const Var<S>& w1, const Var<S>& b1, const Var<S>& w2, const Var<S>& b2) {
  return linear(gelu(linear(x, w1, b1)), w2, b2);
}

template <typename S>
Var<S> gather_rows(const Var<S>& x, IndexList index, Shape out_shape) {
  const Index C = x.value().cols();
  require(!out_shape.empty() && out_shape.back() == C, "gather_rows: channel count must be preserved");
  require(shape_size(out_shape) == static_cast<Index>(index->size()) * C, "gather_rows: index/shape mismatch");
  const Index src_rows = x.value().rows();
  Tensor<S> out(std::move(out_shape));
  const S* src = x.value().data();
  S* dst = out.data();
  for (std::size_t i = 0; i < index->size(); ++i) {
    const Index r = (*index)[i];
    if (r < 0) continue;
    if (r >= src_rows) throw InvalidArgument("gather_rows: index out of range");
    std::copy(src + r * C, src + (r + 1) * C, dst + static_cast<Index>(i) * C);
  }
  return make_result<S>(std::move(out), {&x}, [nx = x.node(), index] {
    return [nx, index](const Tensor<S>& g) {
      if (!nx->requires_grad) return;
      const Index C = g.cols();
      S* dx = nx->grad_ref().data();
      const S* gd = g.data();
      for (std::size_t i = 0; i < index->size(); ++i) {
        const Index r = (*index)[i];
        if (r < 0) continue;
        Eigen::Map<Vector<S>>(dx + r * C, C) += Eigen::Map<const Vector<S>>(gd + static_cast<Index>(i) * C, C);
      }
    };
  });
}

template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int k, Padding padding) {
  require_rank4(x.shape(), "conv2d");
  require(k % 2 == 1, "conv2d: kernel size must be odd");
  const Index cin = x.value().dim(3);
  require(w.value().rank() == 2 && w.value().dim(0) == Index(k) * k * cin,
          "conv2d: weight " + to_string(w.shape()) + " does not match k=" + std::to_string(k) +
              " and C_in=" + std::to_string(cin));
  const Index cout = w.value().dim(1);
  require(b.value().size() == cout, "conv2d: bias size mismatch");
  Tensor<S> out(with_last<S>(x.shape(), cout));
  {
    const RowMatrix<S> col = im2col(x.value(), k, padding);
    out.matrix().noalias() = col * w.value().matrix();
    count_macs(col.rows() * col.cols() * cout);
  }
  out.matrix().rowwise() += b.value().values().transpose();
  return make_result<S>(std::move(out), {&x, &w, &b}, [nx = x.node(), nw = w.node(), nb = b.node(), k, padding] {
    return [nx, nw, nb, k, padding](const Tensor<S>& g) {
      const auto gm = g.matrix();
      if (nb->requires_grad) nb->grad_ref().values() += gm.colwise().sum().transpose();
      if (nw->requires_grad) {
        const RowMatrix<S> col = im2col(nx->value, k, padding);
        nw->grad_ref().matrix().noalias() += col.transpose() * gm;
      }
      if (nx->requires_grad) {
        const RowMatrix<S> dcol = gm * nw->value.matrix().transpose();
        col2im_add(dcol, nx->grad_ref(), k, padding);
      }
      count_macs(2 * gm.rows() * nw->value.dim(0) * nw->value.dim(1));
    };
  });
}

template <typename S>
Var<S> depthwise_conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int k, Padding padding) {
  require_rank4(x.shape(), "depthwise_conv2d");
  require(k % 2 == 1, "depthwise_conv2d: kernel size must be odd");
  const Index B = x.value().dim(0), H = x.value().dim(1), W = x.value().dim(2), C = x.value().dim(3);
  require(w.value().rank() == 2 && w.value().dim(0) == Index(k) * k && w.value().dim(1) == C,
          "depthwise_conv2d: weight shape mismatch");
  require(b.value().size() == C, "depthwise_conv2d: bias size mismatch");
  const int pad = (k - 1) / 2;
  Tensor<S> out(x.shape());
  out.matrix().rowwise() = b.value().values().transpose();
  const S* xd = x.value().data();
  const S* wd = w.value().data();
  S* od = out.data();
  for (Index bb = 0; bb < B; ++bb)
    for (Index h = 0; h < H; ++h)
      for (Index ww = 0; ww < W; ++ww) {
        auto o = Eigen::Map<Vector<S>>(od + ((bb * H + h) * W + ww) * C, C).array();
        for (int dy = 0; dy < k; ++dy) {
          const Index sh = tap_coord(h + dy - pad, H, padding);
          if (sh < 0) continue;
          for (int dx = 0; dx < k; ++dx) {
            const Index sw = tap_coord(ww + dx - pad, W, padding);
            if (sw < 0) continue;
            o += Eigen::Map<const Vector<S>>(xd + ((bb * H + sh) * W + sw) * C, C).array() *
                 Eigen::Map<const Vector<S>>(wd + (dy * k + dx) * C, C).array();
          }
        }
      }
  count_macs(B * H * W * C * k * k);
  return make_result<S>(std::move(out), {&x, &w, &b}, [nx = x.node(), nw = w.node(), nb = b.node(), k, padding] {
    return [nx, nw, nb, k, padding](const Tensor<S>& g) {
      const Index B = g.dim(0), H = g.dim(1), W = g.dim(2), C = g.dim(3);
      const int pad = (k - 1) / 2;
      if (nb->requires_grad) nb->grad_ref().values() += g.matrix().colwise().sum().transpose();
      S* dxd = nx->requires_grad ? nx->grad_ref().data() : nullptr;
      S* dwd = nw->requires_grad ? nw->grad_ref().data() : nullptr;
      const S* xd = nx->value.data();
      const S* wd = nw->value.data();
      for (Index bb = 0; bb < B; ++bb)
        for (Index h = 0; h < H; ++h)
          for (Index ww = 0; ww < W; ++ww) {
            const auto go = Eigen::Map<const Vector<S>>(g.data() + ((bb * H + h) * W + ww) * C, C).array();
            for (int dy = 0; dy < k; ++dy) {
              const Index sh = tap_coord(h + dy - pad, H, padding);
              if (sh < 0) continue;
              for (int dx = 0; dx < k; ++dx) {
                const Index sw = tap_coord(ww + dx - pad, W, padding);
                if (sw < 0) continue;
                const Index src = ((bb * H + sh) * W + sw) * C;
                const Index tap = (dy * k + dx) * C;
                if (dxd) Eigen::Map<Vector<S>>(dxd + src, C).array() += go * Eigen::Map<const Vector<S>>(wd + tap, C).array();
                if (dwd) Eigen::Map<Vector<S>>(dwd + tap, C).array() += go * Eigen::Map<const Vector<S>>(xd + src, C).array();
              }
            }
          }
      count_macs(2 * B * H * W * C * k * k);
    };
  });
}

namespace {

// Flat source element index for every destination element of a pixel shuffle.
std::vector<Index> shuffle_index(Index B, Index H, Index W, Index C, int r) {
  std::vector<Index> idx(static_cast<std::size_t>(B * H * W * C * r * r));
  const Index Ho = H * r, Wo = W * r, Cin = C * r * r;
  std::size_t o = 0;
  for (Index b = 0; b < B; ++b)
    for (Index y = 0; y < Ho; ++y)
      for (Index x = 0; x < Wo; ++x)
        for (Index c = 0; c < C; ++c) {
          const Index h = y / r, i = y % r, w = x / r, j = x % r;
          idx[o++] = ((b * H + h) * W + w) * Cin + c * r * r + i * r + j;
        }
  return idx;
}

}  // namespace

template <typename S>
Var<S> pixel_shuffle(const Var<S>& x, int r) {
  require_rank4(x.shape(), "pixel_shuffle");
  require(r >= 1, "pixel_shuffle: factor must be positive");
  const Index B = x.value().dim(0), H = x.value().dim(1), W = x.value().dim(2), Cin = x.value().dim(3);
  require(Cin % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(Cin) + " not divisible by r^2");
  const Index C = Cin / (r * r);
  auto idx = std::make_shared<const std::vector<Index>>(shuffle_index(B, H, W, C, r));
  Tensor<S> out({B, H * r, W * r, C});
  for (std::size_t o = 0; o < idx->size(); ++o) out[static_cast<Index>(o)] = x.value()[(*idx)[o]];
  return make_result<S>(std::move(out), {&x}, [nx = x.node(), idx] {
    return [nx, idx](const Tensor<S>& g) {
      if (!nx->requires_grad) return;
      auto& dx = nx->grad_ref();
      for (std::size_t o = 0; o < idx->size(); ++o) dx[(*idx)[o]] += g[static_cast<Index>(o)];
    };
  });
}

template <typename S>
Tensor<S> pixel_unshuffle(const Tensor<S>& x, int r) {
  require(x.rank() == 4 && x.dim(1) % r == 0 && x.dim(2) % r == 0, "pixel_unshuffle: dims not divisible by r");
  const Index B = x.dim(0), H = x.dim(1) / r, W = x.dim(2) / r, C = x.dim(3);
  const auto idx = shuffle_index(B, H, W, C, r);
  Tensor<S> out({B, H, W, C * r * r});
  for (std::size_t o = 0; o < idx.size(); ++o) out[idx[o]] = x[static_cast<Index>(o)];
  return out;
}

template <typename S>
Var<S> mean_pool(const Var<S>& x) {
  require_rank4(x.shape(), "mean_pool");
  const Index B = x.value().dim(0), HW = x.value().dim(1) * x.value().dim(2), C = x.value().dim(3);
  Tensor<S> out({B, C});
  for (Index b = 0; b < B; ++b) {
    out.matrix().row(b) = x.value().matrix().middleRows(b * HW, HW).colwise().mean();
  }
  return make_result<S>(std::move(out), {&x}, [nx = x.node(), HW] {
    return [nx, HW](const Tensor<S>& g) {
      if (!nx->requires_grad) return;
      auto dx = nx->grad_ref().matrix();
      for (Index b = 0; b < g.dim(0); ++b) {
        dx.middleRows(b * HW, HW).rowwise() += g.matrix().row(b) / S(HW);
      }
    };
  });
}

template <typename S>
Var<S> channel_scale(const Var<S>& x, const Var<S>& s) {
  require_rank4(x.shape(), "channel_scale");
  const Index B = x.value().dim(0), HW = x.value().dim(1) * x.value().dim(2), C = x.value().dim(3);
  require(s.value().rank() == 2 && s.value().dim(0) == B && s.value().dim(1) == C, "channel_scale: scale shape mismatch");
  Tensor<S> out(x.shape());
  for (Index b = 0; b < B; ++b) {
    out.matrix().middleRows(b * HW, HW) =
        x.value().matrix().middleRows(b * HW, HW).array().rowwise() * s.value().matrix().row(b).array();
  }
  return make_result<S>(std::move(out), {&x, &s}, [nx = x.node(), ns = s.node(), HW] {
    return [nx, ns, HW](const Tensor<S>& g) {
      const Index B = ns->value.dim(0);
      for (Index b = 0; b < B; ++b) {
        const auto gb = g.matrix().middleRows(b * HW, HW);
        if (nx->requires_grad) {
          nx->grad_ref().matrix().middleRows(b * HW, HW).array() +=
              gb.array().rowwise() * ns->value.matrix().row(b).array();
        }
        if (ns->requires_grad) {
          ns->grad_ref().matrix().row(b) +=
              (gb.array() * nx->value.matrix().middleRows(b * HW, HW).array()).colwise().sum().matrix();
        }
      }
    };
  });
}

template <typename S>
Var<S> l1_loss(const Var<S>& pred, const Tensor<S>& target) {
  require(pred.shape() == target.shape(),
          "l1_loss: shape mismatch " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  const Index n = target.size();
  require(n > 0, "l1_loss: empty input");
  Tensor<S> out = Tensor<S>::constant({1}, (pred.value().values() - target.values()).cwiseAbs().sum() / S(n));
  return make_result<S>(std::move(out), {&pred}, [np = pred.node(), &target, n] {
    // Sign pattern is computed now; the target may not outlive the forward.
    auto sign = std::make_shared<Vector<S>>((np->value.values() - target.values()).array().sign().matrix());
    return [np, sign, n](const Tensor<S>& g) { accumulate<S>(np, *sign * (g[0] / S(n))); };
  });
}

template <typename S>
RowMatrix<S> softmax_masked(const RowMatrix<S>& logits, const RowMatrix<S>* mask) {
  RowMatrix<S> z = mask ? RowMatrix<S>(logits + *mask) : logits;
  for (Index r = 0; r < z.rows(); ++r) {
    const S m = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - m).exp();
    z.row(r) /= z.row(r).sum();
  }
  return z;
}

#define CFAT_INSTANTIATE_OPS(S)                                                                 \
  template Var<S> add(const Var<S>&, const Var<S>&);                                            \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                            \
  template Var<S> scale(const Var<S>&, S);                                                      \
  template Var<S> reshape(const Var<S>&, Shape);                                                \
  template Var<S> sum(const Var<S>&);                                                           \
  template Var<S> linear(const Var<S>&, const Var<S>&, const Var<S>&);                          \
  template Var<S> layer_norm(const Var<S>&, const Var<S>&, const Var<S>&, S);                   \
  template Var<S> gelu(const Var<S>&);                                                          \
  template Var<S> sigmoid(const Var<S>&);                                                       \
  template Var<S> mlp(const Var<S>&, const Var<S>&, const Var<S>&, const Var<S>&, const Var<S>&); \
  template Var<S> gather_rows(const Var<S>&, IndexList, Shape);                                 \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const Var<S>&, int, Padding);           \
  template Var<S> depthwise_conv2d(const Var<S>&, const Var<S>&, const Var<S>&, int, Padding);           \
  template Var<S> pixel_shuffle(const Var<S>&, int);                                            \
  template Tensor<S> pixel_unshuffle(const Tensor<S>&, int);                                    \
  template Var<S> mean_pool(const Var<S>&);                                                     \
  template Var<S> channel_scale(const Var<S>&, const Var<S>&);                                  \
  template Var<S> l1_loss(const Var<S>&, const Tensor<S>&);                                     \
  template RowMatrix<S> softmax_masked(const RowMatrix<S>&, const RowMatrix<S>*);

CFAT_INSTANTIATE_OPS(float)
CFAT_INSTANTIATE_OPS(double)

}  // namespace cfat
