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

#include "cfat/attention.hpp"

#include <cmath>

namespace cfat {

AttnParams add_attention_params(ParamStore<double>& store, const std::string& prefix, int channels, int heads,
                                int q_tokens, int kv_tokens, Initializer& init, bool zero_output) {
  require(channels > 0 && heads > 0 && channels % heads == 0,
          "attention: channels " + std::to_string(channels) + " not divisible by heads " + std::to_string(heads));
  const Index C = channels;
  AttnParams p;
  p.channels = channels;
  p.heads = heads;
  p.q_tokens = q_tokens;
  p.kv_tokens = kv_tokens;
  p.wq = store.add(prefix + ".wq", init.trunc_normal({C, C}, 0.02));
  p.bq = store.add(prefix + ".bq", Initializer::zeros({C}));
  p.wk = store.add(prefix + ".wk", init.trunc_normal({C, C}, 0.02));
  p.bk = store.add(prefix + ".bk", Initializer::zeros({C}));
  p.wv = store.add(prefix + ".wv", init.trunc_normal({C, C}, 0.02));
  p.bv = store.add(prefix + ".bv", Initializer::zeros({C}));
  p.wo = store.add(prefix + ".wo", zero_output ? Initializer::zeros({C, C}) : init.trunc_normal({C, C}, 0.02));
  p.bo = store.add(prefix + ".bo", Initializer::zeros({C}));
  p.bias = store.add(prefix + ".pos_bias", init.trunc_normal({q_tokens, kv_tokens}, 0.02));
  return p;
}

namespace {

template <typename S>
using StridedMap = Eigen::Map<RowMatrix<S>, 0, Eigen::OuterStride<>>;
template <typename S>
using ConstStridedMap = Eigen::Map<const RowMatrix<S>, 0, Eigen::OuterStride<>>;

}  // namespace

template <typename S>
Var<S> window_attention(const Var<S>& q, const Var<S>& k, const Var<S>& v, const Var<S>& bias,
                        const AttentionMask& mask, int heads) {
  require(q.value().rank() == 3 && k.value().rank() == 3 && v.value().rank() == 3,
          "window_attention: expected G x T x C token groups");
  const Index G = q.value().dim(0), Tq = q.value().dim(1), C = q.value().dim(2);
  const Index Tkv = k.value().dim(1);
  require(k.shape() == v.shape() && k.value().dim(0) == G && k.value().dim(2) == C,
          "window_attention: key/value shape " + to_string(k.shape()) + " does not match query " + to_string(q.shape()));
  require(heads > 0 && C % heads == 0, "window_attention: channels not divisible by heads");
  require(bias.value().rank() == 2 && bias.value().dim(0) == Tq && bias.value().dim(1) == Tkv,
          "window_attention: bias table " + to_string(bias.shape()) + " does not match token counts");
  if (!mask.empty()) {
    require(Tq == Tkv && mask.tokens() == Tq && G % mask.groups() == 0,
            "window_attention: mask does not match the layout");
  }
  const Index d = C / heads;
  const S scale = S(1) / std::sqrt(S(d));

  // Dense additive masks, one per mask group.
  auto masks = std::make_shared<std::vector<RowMatrix<S>>>();
  if (!mask.empty() && !mask.all_zero()) {
    for (int g = 0; g < mask.groups(); ++g) masks->push_back(mask.matrix<S>(g));
  }

  auto probs = std::make_shared<std::vector<RowMatrix<S>>>(static_cast<std::size_t>(G * heads));
  Tensor<S> out(q.shape());
  const auto bias_m = bias.value().matrix();
  for (Index g = 0; g < G; ++g) {
    for (Index h = 0; h < heads; ++h) {
      ConstStridedMap<S> qh(q.value().data() + g * Tq * C + h * d, Tq, d, Eigen::OuterStride<>(C));
      ConstStridedMap<S> kh(k.value().data() + g * Tkv * C + h * d, Tkv, d, Eigen::OuterStride<>(C));
      ConstStridedMap<S> vh(v.value().data() + g * Tkv * C + h * d, Tkv, d, Eigen::OuterStride<>(C));
      RowMatrix<S>& P = (*probs)[static_cast<std::size_t>(g * heads + h)];
      P.noalias() = (qh * kh.transpose()) * scale;
      P += bias_m;
      if (!masks->empty()) P += (*masks)[static_cast<std::size_t>(g % masks->size())];
      for (Index r = 0; r < Tq; ++r) {
        const S m = P.row(r).maxCoeff();
        P.row(r) = (P.row(r).array() - m).exp();
        P.row(r) /= P.row(r).sum();
      }
      StridedMap<S> oh(out.data() + g * Tq * C + h * d, Tq, d, Eigen::OuterStride<>(C));
      oh.noalias() = P * vh;
    }
  }
  mac_counter() += static_cast<std::uint64_t>(2 * G * Tq * Tkv * C);

  return make_result<S>(
      std::move(out), {&q, &k, &v, &bias},
      [nq = q.node(), nk = k.node(), nv = v.node(), nb = bias.node(), probs, heads, scale] {
        return [nq, nk, nv, nb, probs, heads, scale](const Tensor<S>& grad) {
          const Index G = nq->value.dim(0), Tq = nq->value.dim(1), C = nq->value.dim(2);
          const Index Tkv = nk->value.dim(1);
          const Index d = C / heads;
          S* dq = nq->requires_grad ? nq->grad_ref().data() : nullptr;
          S* dk = nk->requires_grad ? nk->grad_ref().data() : nullptr;
          S* dv = nv->requires_grad ? nv->grad_ref().data() : nullptr;
          RowMatrix<S> dbias = RowMatrix<S>::Zero(Tq, Tkv);
          RowMatrix<S> dP(Tq, Tkv);
          for (Index g = 0; g < G; ++g) {
            for (Index h = 0; h < heads; ++h) {
              const Index qo = g * Tq * C + h * d, ko = g * Tkv * C + h * d;
              const auto stride = Eigen::OuterStride<>(C);
              ConstStridedMap<S> qh(nq->value.data() + qo, Tq, d, stride);
              ConstStridedMap<S> kh(nk->value.data() + ko, Tkv, d, stride);
              ConstStridedMap<S> vh(nv->value.data() + ko, Tkv, d, stride);
              ConstStridedMap<S> go(grad.data() + qo, Tq, d, stride);
              const RowMatrix<S>& P = (*probs)[static_cast<std::size_t>(g * heads + h)];
              if (dv) StridedMap<S>(dv + ko, Tkv, d, stride).noalias() += P.transpose() * go;
              dP.noalias() = go * vh.transpose();
              // dS = P * (dP - rowsum(dP * P))
              const Vector<S> rs = (dP.array() * P.array()).rowwise().sum();
              dP = (P.array() * (dP.array().colwise() - rs.array())).matrix();
              dbias += dP;
              if (dq) StridedMap<S>(dq + qo, Tq, d, stride).noalias() += (dP * kh) * scale;
              if (dk) StridedMap<S>(dk + ko, Tkv, d, stride).noalias() += (dP.transpose() * qh) * scale;
            }
          }
          if (nb->requires_grad) nb->grad_ref().matrix() += dbias;
          mac_counter() += static_cast<std::uint64_t>(4 * G * Tq * Tkv * C);
        };
      });
}

template <typename S>
Var<S> w_msa(Binder<S>& bind, const Var<S>& groups, const AttentionMask& mask, const AttnParams& p) {
  require(groups.value().rank() == 3 && groups.value().dim(2) == p.channels,
          "w_msa: groups " + to_string(groups.shape()) + " do not match the attention width");
  require(groups.value().dim(1) == p.q_tokens && p.q_tokens == p.kv_tokens,
          "w_msa: bias table does not match the layout's token count");
  const Var<S> q = linear(groups, bind(p.wq), bind(p.bq));
  const Var<S> k = linear(groups, bind(p.wk), bind(p.bk));
  const Var<S> v = linear(groups, bind(p.wv), bind(p.bv));
  const Var<S> a = window_attention(q, k, v, bind(p.bias), mask, p.heads);
  return linear(a, bind(p.wo), bind(p.bo));
}

template <typename S>
Var<S> window_msa(Binder<S>& bind, const Var<S>& fm, const WindowLayout& layout, const AttentionMask& mask,
                  const AttnParams& p) {
  require(fm.value().rank() == 4 && fm.value().dim(1) == layout.height() && fm.value().dim(2) == layout.width(),
          "window_msa: map " + to_string(fm.shape()) + " does not match the layout");
  const Index B = fm.value().dim(0), C = fm.value().dim(3);
  const Var<S> groups = gather_rows(fm, layout.partition_index(B), {B * layout.groups(), layout.tokens(), C});
  const Var<S> attended = w_msa(bind, groups, mask, p);
  return gather_rows(attended, layout.reverse_index(B), fm.shape());
}

template <typename S>
Var<S> ocfa(Binder<S>& bind, const Var<S>& fm, int window, double overlap, const AttnParams& p, bool wrap) {
  require(fm.value().rank() == 4, "ocfa: expected a B x H x W x C map");
  const Index B = fm.value().dim(0), C = fm.value().dim(3);
  const int H = static_cast<int>(fm.value().dim(1)), W = static_cast<int>(fm.value().dim(2));
  const auto geo = unfold_geometry(window, overlap);
  require(H % window == 0 && W % window == 0, "ocfa: map size not a multiple of the window");
  const Index tq = Index(window) * window, tkv = Index(geo.extent) * geo.extent;
  require(p.q_tokens == tq && p.kv_tokens == tkv, "ocfa: bias table does not match the window geometry");

  const WindowLayout layout = WindowLayout::rect(H, W, window, 0);
  const Index G = B * layout.groups();
  const Var<S> q = gather_rows(linear(fm, bind(p.wq), bind(p.bq)), layout.partition_index(B), {G, tq, C});
  const auto unfold = unfold_index(B, H, W, window, overlap, wrap);
  const Var<S> k = gather_rows(linear(fm, bind(p.wk), bind(p.bk)), unfold, {G, tkv, C});
  const Var<S> v = gather_rows(linear(fm, bind(p.wv), bind(p.bv)), unfold, {G, tkv, C});
  const Var<S> a = window_attention(q, k, v, bind(p.bias), AttentionMask(), p.heads);
  const Var<S> back = gather_rows(a, layout.reverse_index(B), fm.shape());
  return linear(back, bind(p.wo), bind(p.bo));
}

AttnWeights attention_weights(const ParamStore<double>& store, const AttnParams& p) {
  return {store[p.wq].value, store[p.bq].value, store[p.wk].value, store[p.bk].value, store[p.wv].value,
          store[p.bv].value, store[p.wo].value, store[p.bo].value, store[p.bias].value, p.heads};
}

#define CFAT_INSTANTIATE_ATTENTION(S)                                                                       \
  template Var<S> window_attention(const Var<S>&, const Var<S>&, const Var<S>&, const Var<S>&,             \
                                   const AttentionMask&, int);                                              \
  template Var<S> w_msa(Binder<S>&, const Var<S>&, const AttentionMask&, const AttnParams&);               \
  template Var<S> window_msa(Binder<S>&, const Var<S>&, const WindowLayout&, const AttentionMask&,         \
                             const AttnParams&);                                                            \
  template Var<S> ocfa(Binder<S>&, const Var<S>&, int, double, const AttnParams&, bool);

CFAT_INSTANTIATE_ATTENTION(float)
CFAT_INSTANTIATE_ATTENTION(double)

}  // namespace cfat
