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
#include "cfat/numerics.hpp"
#include "test_util.hpp"

using namespace cfat;
using cfat::test::max_abs_diff;
using cfat::test::random_map;

namespace {

UnitConfig small_unit() {
  UnitConfig c;
  c.channels = 16;
  c.heads = 2;
  c.rect_window = 4;
  c.tri_window = 8;
  c.se_squeeze = 4;
  return c;
}

// Randomize every parameter so no branch is near zero.
void perturb(ParamStore<double>& s, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  for (auto& p : s) p.value = random_tensor(p.value.shape(), rng, -scale, scale);
}

// Copy values by name from `src` into every same-named parameter of `dst`.
void copy_by_name(const ParamStore<double>& src, ParamStore<double>& dst) {
  for (auto& p : dst) {
    const auto id = src.find(p.name);
    REQUIRE(id.has_value());
    p.value = src[*id].value;
  }
}

template <typename F>
Tensor<double> eval(ParamStore<double>& s, F&& f) {
  Binder<double> bind(s);
  return f(bind).value();
}

}  // namespace

TEST_CASE("cwab: shape, zero input, gradient") {
  ParamStore<double> s;
  Initializer init(1);
  BlockInit bi{s, init};
  const auto p = add_cwab_params(bi, "cwab", 16, 4);
  const auto x = random_map(2, 6, 6, 16, 2);
  CHECK(eval(s, [&](auto& b) { return cwab(b, constant(x), p); }).shape() == x.shape());
  const auto zero = Tensor<double>({1, 6, 6, 16});
  CHECK(eval(s, [&](auto& b) { return cwab(b, constant(zero), p); }).values().isZero());

  perturb(s, 3);
  std::mt19937_64 rng(4);
  const ParamId xi = s.add("x", x);
  auto f = [&](Binder<double>& b) { return cwab(b, b(xi), p); };
  const auto target = offset_target(eval(s, f), rng);
  const auto r = grad_check(s, [&](Binder<double>& b) { return l1_loss(f(b), target); }, {200, 1e-4, 5});
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("units are the identity at zero-residual init") {
  for (UnitKind kind : {UnitKind::Rect, UnitKind::Tri}) {
    ParamStore<double> s;
    Initializer init(6);
    BlockInit bi{s, init, true};
    auto cfg = small_unit();
    cfg.shift = 2;
    const auto p = add_unit_params(bi, "u", cfg, kind);
    const auto x = random_map(1, 16, 16, 16, 7);
    const auto y = eval(s, [&](auto& b) {
      return kind == UnitKind::Rect ? rect_unit(b, constant(x), cfg, p) : tri_unit(b, constant(x), cfg, p);
    });
    CHECK(y == x);
  }
}

TEST_CASE("rect_unit preserves shape on 32x32x16, M=8, s=4") {
  ParamStore<double> s;
  Initializer init(8);
  BlockInit bi{s, init};
  UnitConfig cfg = small_unit();
  cfg.rect_window = 8;
  cfg.tri_window = 16;
  cfg.shift = 4;
  const auto p = add_unit_params(bi, "u", cfg, UnitKind::Rect);
  const auto x = random_map(1, 32, 32, 16, 9);
  const auto y = eval(s, [&](auto& b) { return rect_unit(b, constant(x), cfg, p); });
  CHECK(y.shape() == x.shape());
  CHECK_FALSE(y == x);
}

TEST_CASE("alpha = beta = 0 equals a build without CWAB") {
  auto with = small_unit();
  with.alpha = 0.0;
  with.beta = 0.0;
  auto without = with;
  without.use_cwab = false;
  ParamStore<double> sa, sb;
  Initializer ia(10), ib(10);
  BlockInit ba{sa, ia}, bb{sb, ib};
  const auto pa = add_hwab_params(ba, "h", with, 2, 2);
  const auto pb = add_hwab_params(bb, "h", without, 2, 2);
  CHECK(sa.size() > sb.size());
  perturb(sa, 11);
  copy_by_name(sa, sb);
  const auto x = random_map(1, 16, 16, 16, 12);
  const auto ya = eval(sa, [&](auto& b) { return hwab(b, constant(x), with, pa); });
  const auto yb = eval(sb, [&](auto& b) { return hwab(b, constant(x), without, pb); });
  CHECK(ya == yb);

  // With non-zero weights the branch matters.
  with.alpha = 0.5;
  const auto yc = eval(sa, [&](auto& b) { return hwab(b, constant(x), with, pa); });
  CHECK(max_abs_diff(yc, ya) > 1e-6);
}

TEST_CASE("hwab with one pair is tri_unit(rect_unit(x))") {
  ParamStore<double> s;
  Initializer init(13);
  BlockInit bi{s, init};
  auto cfg = small_unit();
  const auto p = add_hwab_params(bi, "h", cfg, 2, 1);
  REQUIRE(p.units.size() == 2);
  perturb(s, 14);
  const auto x = random_map(2, 16, 16, 16, 15);
  auto shifted = cfg;
  shifted.shift = 2;
  const auto a = eval(s, [&](auto& b) { return hwab(b, constant(x), cfg, p); });
  const auto c = eval(s, [&](auto& b) {
    return tri_unit(b, rect_unit(b, constant(x), shifted, p.units[0]), shifted, p.units[1]);
  });
  CHECK(a == c);
}

TEST_CASE("rect shift is s mod M_rect, tri shift is s") {
  ParamStore<double> s;
  Initializer init(16);
  BlockInit bi{s, init};
  auto cfg = small_unit();
  const auto p = add_unit_params(bi, "u", cfg, UnitKind::Rect);
  perturb(s, 17);
  const auto x = random_map(1, 16, 16, 16, 18);
  auto c6 = cfg, c2 = cfg;
  c6.shift = 6;
  c2.shift = 2;
  CHECK(eval(s, [&](auto& b) { return rect_unit(b, constant(x), c6, p); }) ==
        eval(s, [&](auto& b) { return rect_unit(b, constant(x), c2, p); }));
}

TEST_CASE("sparse hwab equals dense hwab on a constant map") {
  auto cfg = small_unit();
  cfg.alpha = cfg.beta = 0.0;
  ParamStore<double> s;
  Initializer init(19);
  BlockInit bi{s, init};
  const auto p = add_hwab_params(bi, "h", cfg, 2, 2);
  perturb(s, 20);
  const auto x = Tensor<double>::constant({1, 16, 16, 16}, 0.3);
  auto sparse = cfg;
  sparse.interval = 2;
  const auto d = eval(s, [&](auto& b) { return hwab(b, constant(x), cfg, p); });
  const auto sp = eval(s, [&](auto& b) { return hwab(b, constant(x), sparse, p); });
  CHECK(max_abs_diff(d, sp) < 1e-12);
  // And on a random map the sampling pattern matters.
  const auto r = random_map(1, 16, 16, 16, 21);
  CHECK(max_abs_diff(eval(s, [&](auto& b) { return hwab(b, constant(r), cfg, p); }),
                     eval(s, [&](auto& b) { return hwab(b, constant(r), sparse, p); })) > 1e-6);
}

TEST_CASE("four HWABs with the shift schedule preserve shape") {
  auto cfg = small_unit();
  cfg.rect_window = 8;
  cfg.tri_window = 16;
  ParamStore<double> s;
  Initializer init(22);
  BlockInit bi{s, init};
  const auto p = add_wab_params(bi, "w", cfg, WabKind::Dense, {0, 4, 8, 12}, 1);
  REQUIRE(p.hwabs.size() == 4);
  const auto x = random_map(1, 32, 32, 16, 23);
  Binder<double> b(s);
  Var<double> y = constant(x);
  for (const auto& h : p.hwabs) {
    y = hwab(b, y, cfg, h);
    CHECK(y.shape() == x.shape());
  }
}

TEST_CASE("wab: identity at zero-residual init") {
  auto cfg = small_unit();
  ParamStore<double> s;
  Initializer init(24);
  BlockInit bi{s, init, true};
  const auto p = add_wab_params(bi, "w", cfg, WabKind::Sparse, {0, 2}, 1);
  cfg.interval = 2;
  const auto x = random_map(1, 16, 16, 16, 25);
  CHECK(eval(s, [&](auto& b) { return wab(b, constant(x), cfg, p); }) == x);
}

TEST_CASE("dense and sparse wab: differ on random maps, agree on constants") {
  auto cfg = small_unit();
  cfg.alpha = cfg.beta = 0.0;
  cfg.interval = 2;
  ParamStore<double> s;
  Initializer init(26);
  BlockInit bi{s, init};
  auto dense = add_wab_params(bi, "w", cfg, WabKind::Dense, {0, 2}, 1);
  perturb(s, 27);
  auto sparse = dense;
  sparse.kind = WabKind::Sparse;
  const auto c = Tensor<double>::constant({1, 16, 16, 16}, -0.4);
  const auto r = random_map(1, 16, 16, 16, 28);
  auto run = [&](const WabParams& p, const Tensor<double>& x) {
    return eval(s, [&](auto& b) { return wab(b, constant(x), cfg, p); });
  };
  CHECK(max_abs_diff(run(dense, c), run(sparse, c)) < 1e-12);
  CHECK(max_abs_diff(run(dense, r), run(sparse, r)) > 1e-6);
}

TEST_CASE("wab: gradient check") {
  auto cfg = small_unit();
  cfg.channels = 8;
  cfg.se_squeeze = 2;
  cfg.interval = 2;
  ParamStore<double> s;
  Initializer init(29);
  BlockInit bi{s, init};
  const auto p = add_wab_params(bi, "w", cfg, WabKind::Sparse, {0, 2}, 1);
  perturb(s, 30, 0.4);
  const auto x = random_map(1, 16, 16, 8, 31);
  auto f = [&](Binder<double>& b) { return wab(b, constant(x), cfg, p); };
  std::mt19937_64 rng(32);
  const auto target = offset_target(eval(s, f), rng);
  const auto r = grad_check(s, [&](Binder<double>& b) { return l1_loss(f(b), target); }, {200, 1e-4, 33});
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("the WAB shift schedule covers every pixel") {
  const auto cfg = small_unit();
  for (int interval : {1, 2}) {
    const int n = 16;
    for (int shift : {0, 2, 4, 6}) {
      for (bool tri : {false, true}) {
        const auto l = tri ? WindowLayout::tri(n, n, cfg.tri_window, shift, interval)
                           : WindowLayout::rect(n, n, cfg.rect_window, rect_shift(shift, cfg.rect_window), interval);
        std::vector<char> hit(n * n, 0);
        for (int g = 0; g < l.groups(); ++g)
          for (int t = 0; t < l.tokens(); ++t) {
            const auto [i, j] = l.pixel(g, t);
            hit[static_cast<std::size_t>(i * n + j)] = 1;
          }
        CHECK(std::count(hit.begin(), hit.end(), 1) == n * n);
      }
    }
  }
}

TEST_CASE("token counts and config validation") {
  UnitConfig c;
  CHECK(rect_tokens(c) == 64);
  CHECK(tri_tokens(c) == 64);
  CHECK(unfold_tokens(c) == 144);
  c.tri_window = 12;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = UnitConfig();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = UnitConfig();
  c.alpha = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
