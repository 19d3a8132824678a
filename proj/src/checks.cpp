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

#include "cfat/checks.hpp"

#include "cfat/pipeline.hpp"
#include "cfat/profiler.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace cfat {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * unit_uniform(rng);
  return t;
}

Tensor<double> offset_target(const Tensor<double>& y0, std::mt19937_64& rng) {
  Tensor<double> t = y0;
  for (Index i = 0; i < t.size(); ++i) {
    const double u = unit_uniform(rng);
    const double mag = 0.05 + 0.25 * u;
    t[i] += (rng() & 1) ? mag : -mag;
  }
  return t;
}

namespace {

using Outcome = std::pair<bool, std::string>;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  require(a.shape() == b.shape(), "shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

// --- geometry ----------------------------------------------------------------

Outcome check_roundtrip(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int cases = 0;
  for (int m : {4, 8, 16}) {
    for (int interval : {1, 2}) {
      const int n = 2 * interval * m;
      const Tensor<double> fm = random_tensor({2, n, n, 3}, rng);
      for (int s = 0; s < 2 * m; s += m / 2) {
        for (bool tri : {false, true}) {
          const WindowLayout layout =
              tri ? WindowLayout::tri(n, n, m, s, interval) : WindowLayout::rect(n, n, m, s, interval);
          const TokenGroups<double> g = partition(fm, layout);
          if (!(reverse(g) == fm)) return {false, std::string(to_string(layout.spec().scheme)) + " M=" +
                                                      std::to_string(m) + " s=" + std::to_string(s)};
          ++cases;
        }
      }
    }
  }
  return {true, std::to_string(cases) + " layouts exact"};
}

Outcome check_cardinality(std::uint64_t) {
  for (int m = 2; m <= 32; m += 2) {
    int count[4] = {0, 0, 0, 0};
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) ++count[static_cast<int>(tri_classify(i, j, m))];
    for (int c : count)
      if (c != m * m / 4) return {false, "M=" + std::to_string(m)};
  }
  return {true, "M = 2..32 even"};
}

Outcome check_shift_modes(std::uint64_t) {
  const ShiftModes modes = shift_modes(16, 32);
  if (modes.rect != std::vector<int>{0, 8} || modes.tri != std::vector<int>{0, 8, 16, 24}) {
    return {false, "unexpected schedule"};
  }
  std::vector<WindowLayout> tri;
  for (int s : modes.tri) tri.push_back(WindowLayout::tri(64, 64, 32, s));
  for (std::size_t a = 0; a < tri.size(); ++a)
    for (std::size_t b = a + 1; b < tri.size(); ++b)
      if (tri[a].same_partition(tri[b])) return {false, "tri layouts coincide"};
  if (!(WindowLayout::rect(64, 64, 16, 16) == WindowLayout::rect(64, 64, 16, 0))) {
    return {false, "rect s=16 differs from s=0"};
  }
  if (WindowLayout::rect(64, 64, 16, 8).same_partition(WindowLayout::rect(64, 64, 16, 0))) {
    return {false, "rect s=8 equals s=0"};
  }
  return {true, "tri 4 distinct, rect s=16 == s=0"};
}

Outcome check_masks(std::uint64_t) {
  for (bool tri : {false, true}) {
    for (int s : {0, 2, 4, 6}) {
      const WindowLayout layout = tri ? WindowLayout::tri(16, 16, 8, s) : WindowLayout::rect(16, 16, 8, s);
      const AttentionMask mask = shift_mask(layout);
      if (s == 0) {
        if (!mask.empty()) return {false, "s=0 mask not empty"};
        continue;
      }
      for (int g = 0; g < mask.groups(); ++g) {
        const RowMatrix<double> m = mask.matrix<double>(g);
        if (!(m.array() == 0.0 || m.array() == kMaskSentinel).all()) return {false, "entry outside {0, sentinel}"};
        if (!(m - m.transpose()).isZero(0.0) || !m.diagonal().isZero(0.0)) return {false, "asymmetric mask"};
      }
    }
  }
  return {true, "0/sentinel, symmetric, zero diagonal"};
}

Outcome check_unfold_k0(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor<double> fm = random_tensor({2, 16, 16, 3}, rng);
  const Tensor<double> u = overlap_unfold(fm, 8, 0.0);
  const Tensor<double> r = rect_partition(fm, 8, 0).data;
  return {u == r, "k=0 unfold vs rect partition"};
}

// --- attention ---------------------------------------------------------------

struct AttnFixture {
  ParamStore<double> store;
  AttnParams params;
};

AttnFixture attention_fixture(int channels, int heads, int tq, int tkv, std::uint64_t seed) {
  AttnFixture f;
  Initializer init(seed);
  f.params = add_attention_params(f.store, "attn", channels, heads, tq, tkv, init);
  // Larger weights than the training init so the softmax is far from uniform.
  std::mt19937_64 rng(seed + 1);
  for (auto& p : f.store) p.value = random_tensor(p.value.shape(), rng, -0.5, 0.5);
  return f;
}

Outcome check_attention_oracle(std::uint64_t seed) {
  double worst = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 4; ++trial) {
    for (Scheme scheme : {Scheme::Rect, Scheme::Tri, Scheme::SparseRect, Scheme::SparseTri}) {
      for (int s : {0, 2}) {
        std::mt19937_64 rng(seed + 100 * trial + 10 * static_cast<int>(scheme) + s);
        const int m = 4, interval = is_sparse(scheme) ? 2 : 1, n = 8 * interval;
        const WindowLayout layout(LayoutSpec{scheme, m, s, interval, n, n});
        const Tensor<double> fm = random_tensor({1, n, n, 16}, rng);
        AttnFixture f = attention_fixture(16, 2, layout.tokens(), layout.tokens(), rng());
        const AttentionMask mask = shift_mask(layout);
        Binder<double> bind(f.store);
        const Tensor<double> got = window_msa(bind, constant(fm), layout, mask, f.params).value();
        const TokenGroups<double> groups = partition(fm, layout);
        const Tensor<double> ref_groups =
            oracle::naive_attention(groups.data, mask, attention_weights(f.store, f.params));
        const Tensor<double> ref = reverse(TokenGroups<double>{ref_groups, layout});
        worst = std::max(worst, max_abs_diff(got, ref));
        ++cases;
      }
    }
  }
  return {worst <= 1e-5, std::to_string(cases) + " cases, max |diff| " + fmt(worst)};
}

Outcome check_ocfa_k0(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor<double> fm = random_tensor({1, 16, 16, 8}, rng);
  AttnFixture f = attention_fixture(8, 2, 16, 16, seed + 7);
  Binder<double> bind(f.store);
  const Tensor<double> a = ocfa(bind, constant(fm), 4, 0.0, f.params).value();
  const Tensor<double> b =
      window_msa(bind, constant(fm), WindowLayout::rect(16, 16, 4, 0), AttentionMask(), f.params).value();
  const double d = max_abs_diff(a, b);
  return {d <= 1e-6, "max |diff| " + fmt(d)};
}

// --- numerics ----------------------------------------------------------------

Outcome check_softmax(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor<double> t = random_tensor({6, 6}, rng, -5.0, 5.0);
  const RowMatrix<double> p = softmax_masked<double>(t.matrix());
  const double dev = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  RowMatrix<double> probe(1, 3);
  probe << 1.0, 2.0, 3.0;
  const RowMatrix<double> q = softmax_masked<double>(probe);
  const bool known = std::abs(q(0, 0) - 0.0900) < 1e-4 && std::abs(q(0, 1) - 0.2447) < 1e-4 &&
                     std::abs(q(0, 2) - 0.6652) < 1e-4;
  return {dev <= 1e-6 && known, "row-sum deviation " + fmt(dev)};
}

Outcome check_pixel_shuffle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Tensor<double> x = random_tensor({2, 3, 5, 12}, rng);
  const Tensor<double> y = pixel_shuffle(constant(x), 2).value();
  const bool ok = pixel_unshuffle(y, 2) == x && y.shape() == Shape{2, 6, 10, 3};
  return {ok, "r=2 round trip"};
}

Outcome check_formulas(std::uint64_t) {
  const bool ok = msa_cost(64, 64, 180) == Count(6570639360ULL) &&
                  dense_window_cost(64, 64, 180, 16) == Count(908328960ULL) &&
                  sparse_window_cost(64, 64, 180, 2) == Count(2040791040ULL) && msa_cost(1, 1, 1) == 6;
  return {ok, "msa / dense / sparse at 64x64x180"};
}

Outcome check_metrics(std::uint64_t) {
  const Image hr = synthetic_image(Texture::Mixed, 32, 32, 3);
  Image sr = hr;
  const float d = 1.0f / (65.481f + 128.553f + 24.966f);
  for (Index i = 0; i < sr.size(); ++i) sr[i] += d;
  const double p = psnr_y(sr, hr, 2);
  const bool ok = std::abs(p - 48.1308) < 0.01 && std::isinf(psnr_y(hr, hr, 2)) &&
                  std::abs(ssim_y(hr, hr, 2) - 1.0) < 1e-12;
  return {ok, "1-level offset PSNR " + fmt(p) + " dB"};
}

Outcome check_model_shapes(std::uint64_t seed) {
  ModelConfig cfg = ModelConfig::tiny();
  ParamStore<double> store;
  const Model model = build(cfg, store, seed);
  ParamStore<float> params = store.cast<float>();
  for (auto [h, w] : {std::pair{17, 23}, std::pair{32, 32}, std::pair{9, 40}}) {
    const Tensor<float> x({1, h, w, 3});
    const Tensor<float> y = infer(model, params, x);
    if (y.shape() != Shape{1, Index(h) * cfg.scale, Index(w) * cfg.scale, 3}) {
      return {false, "bad output " + to_string(y.shape())};
    }
  }
  return {true, "x4 output on 3 sizes"};
}

// --- gradients ---------------------------------------------------------------

Outcome grad_outcome(const GradCheckResult& r, double tol) {
  return {r.max_rel_error < tol, std::to_string(r.coordinates) + " coords, max rel " + fmt(r.max_rel_error) +
                                     (r.max_rel_error < tol ? "" : " at " + r.worst_param)};
}

// Builds an L1 objective with a fixed offset target around f's current output.
Objective smooth_l1(ParamStore<double>& store, const std::function<Var<double>(Binder<double>&)>& f,
                    std::uint64_t seed) {
  Binder<double> bind(store);
  std::mt19937_64 rng(seed);
  auto target = std::make_shared<Tensor<double>>(offset_target(f(bind).value(), rng));
  return [f, target](Binder<double>& b) { return l1_loss(f(b), *target); };
}

Outcome check_grad_primitives(std::uint64_t seed, double analytic_scale) {
  std::mt19937_64 rng(seed);
  ParamStore<double> s;
  const ParamId x = s.add("x", random_tensor({1, 6, 6, 4}, rng));
  const ParamId w1 = s.add("w1", random_tensor({4, 8}, rng, -0.5, 0.5));
  const ParamId b1 = s.add("b1", random_tensor({8}, rng));
  const ParamId w2 = s.add("w2", random_tensor({8, 4}, rng, -0.5, 0.5));
  const ParamId b2 = s.add("b2", random_tensor({4}, rng));
  const ParamId g = s.add("gamma", random_tensor({4}, rng, 0.5, 1.5));
  const ParamId be = s.add("beta", random_tensor({4}, rng));
  const ParamId cw = s.add("conv.w", random_tensor({36, 16}, rng, -0.3, 0.3));
  const ParamId cb = s.add("conv.b", random_tensor({16}, rng));
  const ParamId dw = s.add("dw.w", random_tensor({9, 4}, rng, -0.5, 0.5));
  const ParamId db = s.add("dw.b", random_tensor({4}, rng));
  const ParamId q = s.add("q", random_tensor({3, 9, 4}, rng));
  const ParamId k = s.add("k", random_tensor({3, 9, 4}, rng));
  const ParamId v = s.add("v", random_tensor({3, 9, 4}, rng));
  const ParamId bias = s.add("bias", random_tensor({9, 9}, rng));
  const auto f = [=](Binder<double>& bd) {
    Var<double> h = layer_norm(bd(x), bd(g), bd(be));
    h = mlp(h, bd(w1), bd(b1), bd(w2), bd(b2));
    h = depthwise_conv2d(h, bd(dw), bd(db), 3);
    h = sigmoid(h);
    h = conv2d(h, bd(cw), bd(cb), 3);
    h = pixel_shuffle(h, 2);
    const Var<double> a = window_attention(bd(q), bd(k), bd(v), bd(bias), AttentionMask(), 2);
    return add(scale(sum(h), 0.01), sum(gelu(a)));
  };
  const Objective obj = smooth_l1(s, [f](Binder<double>& b) { return reshape(f(b), {1}); }, seed + 1);
  GradCheckOptions o;
  o.samples = 300;
  o.seed = seed;
  o.analytic_scale = analytic_scale;
  return grad_outcome(grad_check(s, obj, o), 1e-3);
}

Outcome check_grad_wab(std::uint64_t seed, double analytic_scale) {
  UnitConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.rect_window = 4;
  cfg.tri_window = 8;
  cfg.interval = 2;
  cfg.alpha = 0.3;
  cfg.beta = 0.4;
  cfg.se_squeeze = 2;
  ParamStore<double> store;
  Initializer init(seed);
  BlockInit b{store, init, false};
  const WabParams p = add_wab_params(b, "wab", cfg, WabKind::Sparse, {0, 2}, 1);
  std::mt19937_64 rng(seed + 3);
  for (auto& prm : store) prm.value.values() += random_tensor(prm.value.shape(), rng, -0.2, 0.2).values();
  const Tensor<double> fm = random_tensor({1, 16, 16, 8}, rng);
  const Objective obj = smooth_l1(
      store, [&, fm](Binder<double>& bd) { return wab(bd, constant(fm), cfg, p); }, seed + 4);
  GradCheckOptions o;
  o.samples = 200;
  o.seed = seed;
  o.analytic_scale = analytic_scale;
  return grad_outcome(grad_check(store, obj, o), 1e-3);
}

Outcome check_grad_model(std::uint64_t seed, double analytic_scale) {
  ParamStore<double> store;
  const Model model = build(ModelConfig::tiny(), store, seed);
  std::mt19937_64 rng(seed + 5);
  const Tensor<double> x = random_tensor({1, 16, 16, 3}, rng, 0.0, 1.0);
  const Objective obj = smooth_l1(
      store, [&model, x](Binder<double>& bd) { return forward(model, bd, constant(x)); }, seed + 6);
  GradCheckOptions o;
  o.samples = 60;
  o.seed = seed;
  o.analytic_scale = analytic_scale;
  return grad_outcome(grad_check(store, obj, o), 1e-3);
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  const std::uint64_t seed = options.seed;
  const double scale = options.sabotage_grad ? 2.0 : 1.0;
  std::vector<std::pair<std::string, std::function<Outcome()>>> suite = {
      {"geometry.roundtrip", [&] { return check_roundtrip(seed); }},
      {"geometry.cardinality", [&] { return check_cardinality(seed); }},
      {"geometry.shift_modes", [&] { return check_shift_modes(seed); }},
      {"geometry.masks", [&] { return check_masks(seed); }},
      {"geometry.unfold_k0", [&] { return check_unfold_k0(seed); }},
      {"attention.oracle", [&] { return check_attention_oracle(seed); }},
      {"attention.ocfa_k0", [&] { return check_ocfa_k0(seed); }},
      {"numerics.softmax", [&] { return check_softmax(seed); }},
      {"numerics.pixel_shuffle", [&] { return check_pixel_shuffle(seed); }},
      {"profiler.formulas", [&] { return check_formulas(seed); }},
      {"pipeline.metrics", [&] { return check_metrics(seed); }},
      {"model.shapes", [&] { return check_model_shapes(seed); }},
  };
  if (!options.fast || options.sabotage_grad) {
    suite.push_back({"grad.primitives", [&] { return check_grad_primitives(seed, scale); }});
  }
  if (!options.fast) {
    suite.push_back({"grad.wab", [&] { return check_grad_wab(seed, scale); }});
    suite.push_back({"grad.model", [&] { return check_grad_model(seed, scale); }});
  }
  std::vector<CheckResult> results;
  for (auto& [name, fn] : suite) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r{name, false, {}, 0.0};
    try {
      std::tie(r.passed, r.detail) = fn();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  }
  return results;
}

void print_check_table(std::ostream& out, const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "check" << "  result  time(s)  detail\n";
  for (const auto& r : results) {
    out << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << (r.passed ? "PASS  " : "FAIL  ")
        << "  " << std::right << std::setw(7) << std::fixed << std::setprecision(2) << r.seconds << "  " << r.detail
        << '\n';
  }
}

}  // namespace cfat
