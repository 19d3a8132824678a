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
#include "cfat/ops.hpp"
#include "cfat/profiler.hpp"
#include "test_util.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <sstream>

using namespace cfat;
using boost::multiprecision::cpp_int;

namespace {

cpp_int big(Count c) {
  cpp_int r = static_cast<std::uint64_t>(c >> 64);
  r <<= 64;
  r += static_cast<std::uint64_t>(c);
  return r;
}

cpp_int ref_msa(cpp_int h, cpp_int w, cpp_int c) { return 4 * h * w * c * c + 2 * (h * w) * (h * w) * c; }
cpp_int ref_dense(cpp_int h, cpp_int w, cpp_int c, cpp_int l) { return 4 * h * w * c * c + 2 * h * w * l * l * c; }
cpp_int ref_sparse(cpp_int h, cpp_int w, cpp_int c, cpp_int s) {
  return 4 * h * w * c * c + 2 * (h * w / s) * (h * w / s) * c;
}

}  // namespace

TEST_CASE("cost formulas: worked values") {
  CHECK(to_string(msa_cost(64, 64, 180)) == "6570639360");
  CHECK(to_string(dense_window_cost(64, 64, 180, 16)) == "908328960");
  CHECK(to_string(sparse_window_cost(64, 64, 180, 2)) == "2040791040");
  CHECK(msa_cost(1, 1, 1) == 6);
  CHECK(to_string(0) == "0");
}

TEST_CASE("cost formulas agree with arbitrary-precision arithmetic") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    // Up to 2^20 per side so (HW)^2 C exceeds 64 bits.
    const std::uint64_t h = 1 + rng() % (1u << 20), w = 1 + rng() % (1u << 20), c = 1 + rng() % 4096;
    const std::uint64_t l = 1 + rng() % 64, s = 1 + rng() % 8;
    CHECK(big(msa_cost(h, w, c)) == ref_msa(h, w, c));
    CHECK(big(dense_window_cost(h, w, c, l)) == ref_dense(h, w, c, l));
    const std::uint64_t hw = h * w;
    if (hw % s == 0) CHECK(big(sparse_window_cost(h, w, c, s)) == ref_sparse(h, w, c, s));
  }
  // Past 64 bits: MSA on a 65536 x 65536 map.
  const auto huge = msa_cost(65536, 65536, 180);
  CHECK(huge > Count(std::numeric_limits<std::uint64_t>::max()));
  CHECK(big(huge) == ref_msa(65536, 65536, 180));
  CHECK(to_string(huge) == ref_msa(65536, 65536, 180).str());
}

TEST_CASE("cost formulas: coincidences and scaling") {
  CHECK(dense_window_cost(16, 16, 32, 16) == msa_cost(16, 16, 32));
  CHECK(sparse_window_cost(24, 40, 12, 1) == msa_cost(24, 40, 12));
  const std::uint64_t h = 64, w = 48, c = 60;
  for (std::uint64_t s : {2u, 3u, 4u}) {
    const Count lin = 4 * Count(h * w) * c * c;
    CHECK((msa_cost(h, w, c) - lin) == (sparse_window_cost(h, w, c, s) - lin) * s * s);
  }
  // linear in HW at fixed L
  CHECK(dense_window_cost(128, 48, c, 8) == 2 * dense_window_cost(64, 48, c, 8));
  // quadratic in HW as HW grows
  double prev = 0.0;
  for (std::uint64_t n : {64u, 1024u, 16384u}) {
    const double r = static_cast<double>(msa_cost(2 * n, n, 8)) / static_cast<double>(msa_cost(n, n, 8));
    CHECK(r > prev);
    CHECK(r < 4.0);
    prev = r;
  }
  CHECK(prev == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("cost formulas reject degenerate inputs") {
  CHECK_THROWS_AS(msa_cost(0, 4, 4), InvalidArgument);
  CHECK_THROWS_AS(msa_cost(4, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(dense_window_cost(4, 4, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(dense_window_cost(4, 4, 4, 5), InvalidArgument);
  CHECK_THROWS_AS(sparse_window_cost(4, 4, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(sparse_window_cost(3, 3, 4, 2), InvalidArgument);
}

TEST_CASE("measured w_msa multiplies match the dense-window formula per scheme") {
  const int h = 16, w = 16, c = 8, heads = 2;
  for (Scheme scheme : {Scheme::Rect, Scheme::Tri, Scheme::SparseRect, Scheme::SparseTri}) {
    const int m = is_tri(scheme) ? 8 : 4;
    const int interval = is_sparse(scheme) ? 2 : 1;
    const auto layout = is_tri(scheme) ? WindowLayout::tri(h, w, m, 0, interval) : WindowLayout::rect(h, w, m, 0, interval);
    ParamStore<double> store;
    Initializer init(1);
    const auto p = add_attention_params(store, "a", c, heads, layout.tokens(), layout.tokens(), init);
    Binder<double> bind(store);
    const auto fm = constant(cfat::test::random_map(1, h, w, c, 2));
    MacScope scope;
    window_msa(bind, fm, layout, AttentionMask(), p);
    // With T tokens per window the quadratic term is 2 HW T C; T = L^2 for squares.
    const std::uint64_t t = static_cast<std::uint64_t>(layout.tokens());
    const Count expected = 4 * Count(h * w) * c * c + 2 * Count(h * w) * t * c;
    CAPTURE(to_string(scheme));
    CHECK(Count(scope.count()) == expected);
    if (!is_tri(scheme)) CHECK(Count(scope.count()) == dense_window_cost(h, w, c, m));
  }
}

TEST_CASE("model_macs matches the instrumented forward pass") {
  for (int side : {16, 20}) {
    ModelConfig cfg = ModelConfig::tiny();
    ParamStore<double> store;
    const Model model = build(cfg, store, 4);
    const auto lr = cfat::test::random_map(1, side, side + 4, 3, 5);
    MacScope scope;
    infer(model, store, lr);
    const auto cost = model_macs(cfg, side, side + 4);
    CAPTURE(side);
    CHECK(cost.macs == scope.count());
    CHECK(static_cast<Index>(cost.params) == store.total_elements());
    CHECK(cost.attention_macs < cost.macs);
  }
}

TEST_CASE("doubling C scales linear-layer parameters by four") {
  ModelConfig a = ModelConfig::tiny();
  ModelConfig b = a;
  b.channels *= 2;
  const auto pa = model_macs(a, 16, 16).params, pb = model_macs(b, 16, 16).params;
  CHECK(static_cast<double>(pb) / static_cast<double>(pa) > 3.0);
  CHECK(static_cast<double>(pb) / static_cast<double>(pa) < 4.0);
}

TEST_CASE("cost csv") {
  std::ostringstream empty;
  write_cost_csv(empty, {});
  CHECK(empty.str() == "formula,H,W,C,L,S,count\n");
  std::ostringstream out;
  write_cost_csv(out, {{"msa", 64, 64, 180, 16, 2, msa_cost(64, 64, 180)}});
  CHECK(out.str() == "formula,H,W,C,L,S,count\nmsa,64,64,180,16,2,6570639360\n");
}
