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

#include "cfat/profiler.hpp"

#include <algorithm>

namespace cfat {

std::string to_string(Count c) {
  if (c == 0) return "0";
  std::string s;
  while (c > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(c % 10)));
    c /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

namespace {
void require_positive(std::initializer_list<std::uint64_t> v, const char* op) {
  for (auto x : v) require(x > 0, std::string(op) + ": arguments must be positive");
}
}  // namespace

Count msa_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C) {
  require_positive({H, W, C}, "msa_cost");
  const Count hw = Count(H) * W;
  return 4 * hw * C * C + 2 * hw * hw * C;
}

Count dense_window_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C, std::uint64_t L) {
  require_positive({H, W, C, L}, "dense_window_cost");
  const Count hw = Count(H) * W;
  require(Count(L) * L <= hw, "dense_window_cost: window larger than the map");
  return 4 * hw * C * C + 2 * hw * L * L * C;
}

Count sparse_window_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C, std::uint64_t S) {
  require_positive({H, W, C, S}, "sparse_window_cost");
  const Count hw = Count(H) * W;
  require(hw % S == 0, "sparse_window_cost: HW not divisible by S");
  const Count q = hw / S;
  return 4 * hw * C * C + 2 * q * q * C;
}

namespace {

struct Counter {
  std::uint64_t params = 0, macs = 0, attn_macs = 0;

  void linear(std::uint64_t tokens, std::uint64_t cin, std::uint64_t cout) {
    params += cin * cout + cout;
    macs += tokens * cin * cout;
  }
  void conv(std::uint64_t pixels, std::uint64_t cin, std::uint64_t cout) {
    params += 9 * cin * cout + cout;
    macs += pixels * 9 * cin * cout;
  }
  void depthwise(std::uint64_t pixels, std::uint64_t c) {
    params += 9 * c + c;
    macs += pixels * 9 * c;
  }
  void layer_norm(std::uint64_t c) { params += 2 * c; }
  void attention(std::uint64_t tokens, std::uint64_t c, std::uint64_t tq, std::uint64_t tkv) {
    for (int i = 0; i < 4; ++i) linear(tokens, c, c);
    params += tq * tkv;
    const std::uint64_t a = 2 * (tokens / tq) * tq * tkv * c;
    macs += a;
    attn_macs += a;
  }
  void mlp(std::uint64_t tokens, std::uint64_t c, std::uint64_t hidden) {
    linear(tokens, c, hidden);
    linear(tokens, hidden, c);
  }
};

}  // namespace

ModelCost model_macs(const ModelConfig& cfg, int height, int width) {
  cfg.validate();
  require(height > 0 && width > 0, "model_macs: size must be positive");
  const std::uint64_t P = static_cast<std::uint64_t>(cfg.pad_multiple());
  const std::uint64_t Hp = (height + P - 1) / P * P, Wp = (width + P - 1) / P * P;
  const std::uint64_t N = Hp * Wp, C = static_cast<std::uint64_t>(cfg.channels);
  const std::uint64_t hidden = C * static_cast<std::uint64_t>(cfg.mlp_ratio);
  const std::uint64_t Mr = static_cast<std::uint64_t>(cfg.rect_window), Mt = static_cast<std::uint64_t>(cfg.tri_window);
  const UnitConfig unit = cfg.unit();
  const std::uint64_t r0 = static_cast<std::uint64_t>(unfold_geometry(cfg.rect_window, cfg.overlap).extent);
  const std::uint64_t se = C / static_cast<std::uint64_t>(cfg.se_squeeze);

  Counter k;
  k.conv(N, static_cast<std::uint64_t>(cfg.in_channels), C);
  for (int w = 0; w < cfg.n_wab; ++w) {
    for (int h = 0; h < cfg.n_hwab(); ++h) {
      for (int pair = 0; pair < cfg.n_pairs; ++pair) {
        for (int kind = 0; kind < 2; ++kind) {
          const std::uint64_t T = kind == 0 ? Mr * Mr : Mt * Mt / 4;
          k.layer_norm(C);
          k.attention(N, C, T, T);
          if (cfg.use_cwab) {
            const double weight = kind == 0 ? unit.alpha : unit.beta;
            const std::uint64_t before = k.macs;
            k.depthwise(N, C);
            k.linear(N, C, C);
            k.depthwise(N, C);
            k.linear(N, C, C);
            // Squeeze-excitation on pooled features: one token per sub-map.
            const std::uint64_t pooled = (w % 2 == 1 ? std::uint64_t(cfg.interval) * cfg.interval : 1);
            k.linear(pooled, C, se);
            k.linear(pooled, se, C);
            if (weight == 0.0) k.macs = before;  // branch skipped at run time
          }
          k.layer_norm(C);
          k.mlp(N, C, hidden);
        }
      }
    }
    k.layer_norm(C);
    k.attention(N, C, Mr * Mr, r0 * r0);
    k.layer_norm(C);
    k.mlp(N, C, hidden);
    k.conv(N, C, C);
  }
  k.conv(N, C, C);
  std::uint64_t pixels = N;
  for (int r : upsample_stages(cfg.scale)) {
    k.conv(pixels, C, C * r * r);
    pixels *= static_cast<std::uint64_t>(r * r);
  }
  k.conv(pixels, C, static_cast<std::uint64_t>(cfg.in_channels));
  return {k.params, k.macs, k.attn_macs};
}

void write_cost_csv(std::ostream& out, const std::vector<CostReport>& reports) {
  out << "formula,H,W,C,L,S,count\n";
  for (const CostReport& r : reports) {
    out << r.formula << ',' << r.H << ',' << r.W << ',' << r.C << ',' << r.L << ',' << r.S << ','
        << to_string(r.count) << '\n';
  }
}

}  // namespace cfat
