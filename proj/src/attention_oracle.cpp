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

// Reference attention. Intentionally scalar loops only: it must stay
// independent of the batched Eigen path it is used to check.

#include "cfat/attention.hpp"

#include <cmath>
#include <vector>

namespace cfat::oracle {

namespace {

using Grid = std::vector<std::vector<double>>;

Grid project(const Tensor<double>& x, Index g, Index T, const Tensor<double>& w, const Tensor<double>& b) {
  const Index C = x.dim(2), Cout = w.dim(1);
  Grid out(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(Cout), 0.0));
  for (Index t = 0; t < T; ++t) {
    for (Index o = 0; o < Cout; ++o) {
      double acc = b[o];
      for (Index c = 0; c < C; ++c) acc += x[(g * T + t) * C + c] * w[c * Cout + o];
      out[t][o] = acc;
    }
  }
  return out;
}

Grid rows_of(const Tensor<double>& x, Index g) {
  const Index T = x.dim(1), C = x.dim(2);
  Grid out(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(C)));
  for (Index t = 0; t < T; ++t)
    for (Index c = 0; c < C; ++c) out[t][c] = x[(g * T + t) * C + c];
  return out;
}

// Attention for one group given projected q (Tq rows) and k, v (Tkv rows).
Grid attend(const Grid& q, const Grid& k, const Grid& v, const AttnWeights& w, const AttentionMask& mask, Index g) {
  const std::size_t Tq = q.size(), Tkv = k.size(), C = q[0].size();
  const std::size_t d = C / static_cast<std::size_t>(w.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Grid o(Tq, std::vector<double>(C, 0.0));
  for (int h = 0; h < w.heads; ++h) {
    const std::size_t c0 = static_cast<std::size_t>(h) * d;
    for (std::size_t t = 0; t < Tq; ++t) {
      std::vector<double> logit(Tkv);
      double mx = -1e300;
      for (std::size_t u = 0; u < Tkv; ++u) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += q[t][c0 + c] * k[u][c0 + c];
        logit[u] = dot * scale + w.bias[static_cast<Index>(t * Tkv + u)];
        if (!mask.empty() && !mask.allowed(static_cast<int>(g % mask.groups()), static_cast<int>(t), static_cast<int>(u))) {
          logit[u] += kMaskSentinel;
        }
        if (logit[u] > mx) mx = logit[u];
      }
      double denom = 0.0;
      for (std::size_t u = 0; u < Tkv; ++u) {
        logit[u] = std::exp(logit[u] - mx);
        denom += logit[u];
      }
      for (std::size_t u = 0; u < Tkv; ++u) {
        const double p = logit[u] / denom;
        for (std::size_t c = 0; c < d; ++c) o[t][c0 + c] += p * v[u][c0 + c];
      }
    }
  }
  // Output projection.
  Grid out(Tq, std::vector<double>(C, 0.0));
  for (std::size_t t = 0; t < Tq; ++t)
    for (std::size_t oc = 0; oc < C; ++oc) {
      double acc = w.bo[static_cast<Index>(oc)];
      for (std::size_t c = 0; c < C; ++c) acc += o[t][c] * w.wo[static_cast<Index>(c * C + oc)];
      out[t][oc] = acc;
    }
  return out;
}

}  // namespace

Tensor<double> naive_attention(const Tensor<double>& groups, const AttentionMask& mask, const AttnWeights& w) {
  require(groups.rank() == 3, "naive_attention: expected G x T x C");
  const Index G = groups.dim(0), T = groups.dim(1), C = groups.dim(2);
  Tensor<double> out(groups.shape());
  for (Index g = 0; g < G; ++g) {
    const Grid q = project(groups, g, T, w.wq, w.bq);
    const Grid k = project(groups, g, T, w.wk, w.bk);
    const Grid v = project(groups, g, T, w.wv, w.bv);
    const Grid o = attend(q, k, v, w, mask, g);
    for (Index t = 0; t < T; ++t)
      for (Index c = 0; c < C; ++c) out[(g * T + t) * C + c] = o[t][c];
  }
  return out;
}

Tensor<double> naive_cross_attention(const Tensor<double>& q_groups, const Tensor<double>& k_proj,
                                     const Tensor<double>& v_proj, const AttnWeights& w) {
  require(q_groups.rank() == 3 && k_proj.rank() == 3 && v_proj.rank() == 3, "naive_cross_attention: rank mismatch");
  const Index G = q_groups.dim(0), T = q_groups.dim(1), C = q_groups.dim(2);
  Tensor<double> out(q_groups.shape());
  for (Index g = 0; g < G; ++g) {
    const Grid q = project(q_groups, g, T, w.wq, w.bq);
    const Grid o = attend(q, rows_of(k_proj, g), rows_of(v_proj, g), w, AttentionMask(), g);
    for (Index t = 0; t < T; ++t)
      for (Index c = 0; c < C; ++c) out[(g * T + t) * C + c] = o[t][c];
  }
  return out;
}

}  // namespace cfat::oracle
