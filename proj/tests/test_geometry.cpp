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
#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace cfat;
using cfat::test::random_map;

TEST_CASE("tri_classify: M=4 table") {
  using K = TriangleKind;
  const std::map<K, std::set<std::pair<int, int>>> expected = {
      {K::Upper, {{0, 0}, {0, 1}, {0, 2}, {1, 1}}},
      {K::Right, {{0, 3}, {1, 2}, {1, 3}, {2, 3}}},
      {K::Lower, {{2, 2}, {3, 1}, {3, 2}, {3, 3}}},
      {K::Left, {{1, 0}, {2, 0}, {2, 1}, {3, 0}}},
  };
  for (const auto& [kind, pixels] : expected)
    for (const auto& [i, j] : pixels) CHECK(tri_classify(i, j, 4) == kind);
  CHECK(tri_classify(0, 1, 4) == K::Upper);
  CHECK(tri_classify(1, 2, 4) == K::Right);
}

TEST_CASE("tri_classify: every kind gets M^2/4 pixels") {
  for (int m = 2; m <= 64; m += 2) {
    std::array<int, 4> count{};
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) ++count[static_cast<int>(tri_classify(i, j, m))];
    for (int c : count) CHECK(c == m * m / 4);
  }
}

TEST_CASE("tri_classify: rejects odd M and out-of-range pixels") {
  CHECK_THROWS_AS(tri_classify(0, 0, 5), InvalidArgument);
  CHECK_THROWS_AS(tri_classify(4, 0, 4), InvalidArgument);
  CHECK_THROWS_AS(tri_classify(0, -1, 4), InvalidArgument);
}

TEST_CASE("tri_partition: group counts") {
  const auto fm32 = random_map(1, 32, 32, 2, 1);
  const auto g32 = tri_partition(fm32, 32, 0);
  CHECK(g32.layout.groups() == 4);
  CHECK(g32.layout.tokens() == 256);
  CHECK(g32.data.shape() == Shape{4, 256, 2});

  const auto g8 = tri_partition(random_map(1, 8, 8, 1, 2), 4, 0);
  CHECK(g8.layout.groups() == 16);
  CHECK(g8.layout.tokens() == 4);
  // Row-major scan of the Upper triangle of square (0,0): (0,0), (0,1), ...
  const auto slot = g8.layout.slot(0, 1);
  CHECK(slot.group == static_cast<int>(TriangleKind::Upper));
  CHECK(slot.token == 1);
}

TEST_CASE("rect_partition: group counts") {
  const auto g = rect_partition(random_map(1, 64, 64, 1, 3), 16, 0);
  CHECK(g.layout.groups() == 16);
  CHECK(g.layout.tokens() == 256);
}

TEST_CASE("partition/reverse round trip is exact") {
  const auto fm = random_map(2, 16, 16, 3, 4);
  for (int s : {0, 4}) {
    CHECK(tri_reverse(tri_partition(fm, 8, s)) == fm);
    CHECK(rect_reverse(rect_partition(fm, 8, s)) == fm);
  }
  for (int interval : {2, 4}) {
    const auto big = random_map(1, 32, 32, 2, 5);
    for (int s : {0, 2, 3}) {
      CHECK(reverse(partition(big, WindowLayout::tri(32, 32, 4, s, interval))) == big);
      CHECK(reverse(partition(big, WindowLayout::rect(32, 32, 4, s, interval))) == big);
    }
  }
}

TEST_CASE("reverse detects permuted tokens") {
  const auto fm = random_map(1, 8, 8, 2, 6);
  for (bool tri : {false, true}) {
    auto g = tri ? tri_partition(fm, 4, 0) : rect_partition(fm, 4, 0);
    auto& d = g.data;
    // Swap tokens 0 and 1 of group 0.
    for (Index c = 0; c < d.dim(2); ++c) std::swap(d[c], d[d.dim(2) + c]);
    CHECK_FALSE(reverse(g) == fm);
  }
}

TEST_CASE("constant maps stay constant under any shift") {
  const auto fm = Tensor<double>::constant({1, 16, 16, 2}, 0.25);
  for (int s = 0; s < 16; s += 3) {
    CHECK(tri_reverse(tri_partition(fm, 8, s)) == fm);
    const auto g = tri_partition(fm, 8, s).data;
    CHECK(g.values().minCoeff() == 0.25);
    CHECK(g.values().maxCoeff() == 0.25);
  }
}

TEST_CASE("partition rejects non-multiple sizes") {
  const auto fm = random_map(1, 12, 12, 1, 7);
  CHECK_THROWS_AS(rect_partition(fm, 8, 0), InvalidArgument);
  CHECK_THROWS_AS(tri_partition(fm, 8, 0), InvalidArgument);
  CHECK_THROWS_AS(WindowLayout::tri(12, 12, 3, 0), InvalidArgument);
}

TEST_CASE("partition follows cyclic_shift then tiling") {
  const auto fm = random_map(1, 16, 16, 1, 8);
  const int s = 5;
  const auto shifted = cyclic_shift(fm, -s, -s);
  const auto g = rect_partition(fm, 8, s);
  const auto g0 = rect_partition(shifted, 8, 0);
  CHECK(g.data == g0.data);
  CHECK(cyclic_shift(shifted, s, s) == fm);
  // Pixel (p, q) of the shifted map holds original pixel (p + s, q + s).
  CHECK(shifted.at(0, 0, 0, 0) == fm.at(0, s, s, 0));
  CHECK(shifted.at(0, 15, 15, 0) == fm.at(0, (15 + s) % 16, (15 + s) % 16, 0));
}

TEST_CASE("shift_modes schedules") {
  const auto paper = shift_modes(16, 32);
  CHECK(paper.rect == std::vector<int>{0, 8});
  CHECK(paper.tri == std::vector<int>{0, 8, 16, 24});
  const auto tiny = shift_modes(8, 16);
  CHECK(tiny.rect == std::vector<int>{0, 4});
  CHECK(tiny.tri == std::vector<int>{0, 4, 8, 12});
  CHECK(rect_shift(12, 8) == 4);
}

TEST_CASE("shift uniqueness on 64x64") {
  std::vector<WindowLayout> tri;
  for (int s : {0, 8, 16, 24}) tri.push_back(WindowLayout::tri(64, 64, 32, s));
  for (std::size_t a = 0; a < tri.size(); ++a)
    for (std::size_t b = a + 1; b < tri.size(); ++b) {
      CHECK_FALSE(tri[a] == tri[b]);
      CHECK_FALSE(tri[a].same_partition(tri[b]));
    }
  CHECK(WindowLayout::rect(64, 64, 16, 16) == WindowLayout::rect(64, 64, 16, 0));
  CHECK(WindowLayout::rect(64, 64, 16, 24) == WindowLayout::rect(64, 64, 16, 8));
  CHECK_FALSE(WindowLayout::rect(64, 64, 16, 8) == WindowLayout::rect(64, 64, 16, 0));
  CHECK(WindowLayout::rect(16, 16, 8, 8) == WindowLayout::rect(16, 16, 8, 0));
}

TEST_CASE("tri and rect layouts differ as token groupings") {
  const auto rect = WindowLayout::rect(32, 32, 8, 4);
  const auto tri = WindowLayout::tri(32, 32, 16, 4);
  CHECK(rect.tokens() == tri.tokens());
  CHECK_FALSE(rect.same_partition(tri));
}

TEST_CASE("shift_mask: zero shift gives no mask") {
  CHECK(shift_mask(WindowLayout::rect(16, 16, 8, 0)).all_zero());
  CHECK(shift_mask(WindowLayout::tri(16, 16, 8, 0)).all_zero());
  CHECK(shift_mask(WindowLayout::rect(16, 16, 8, 8)).all_zero());
}

namespace {

// Region id of an original pixel: label the shifted map's coordinate bands
// [0, n-M), [n-M, n-s), [n-s, n) along each axis.
int brute_region(int i, int j, int n, int m, int s) {
  auto band = [&](int p) {
    const int q = ((p - s) % n + n) % n;
    if (q < n - m) return 0;
    if (q < n - s) return 1;
    return 2;
  };
  return band(i) * 3 + band(j);
}

}  // namespace

TEST_CASE("shift_mask: rect M=4 s=2 on 8x8 matches brute force") {
  const auto layout = WindowLayout::rect(8, 8, 4, 2);
  const auto mask = shift_mask(layout);
  REQUIRE_FALSE(mask.empty());
  int corner_regions = 0;
  for (int g = 0; g < layout.groups(); ++g) {
    const auto m = mask.matrix<double>(g);
    std::set<int> ids;
    for (int t = 0; t < layout.tokens(); ++t) {
      const auto [ti, tj] = layout.pixel(g, t);
      ids.insert(brute_region(ti, tj, 8, 4, 2));
      for (int u = 0; u < layout.tokens(); ++u) {
        const auto [ui, uj] = layout.pixel(g, u);
        const bool same = brute_region(ti, tj, 8, 4, 2) == brute_region(ui, uj, 8, 4, 2);
        CHECK(m(t, u) == (same ? 0.0 : kMaskSentinel));
      }
    }
    corner_regions = std::max(corner_regions, static_cast<int>(ids.size()));
  }
  // The bottom-right window after the shift mixes four bands.
  CHECK(corner_regions == 4);
  const auto last = mask.matrix<double>(layout.groups() - 1);
  std::set<int> last_ids;
  for (int t = 0; t < layout.tokens(); ++t) last_ids.insert(mask.region(layout.groups() - 1, t));
  CHECK(last_ids.size() == 4);
  CHECK(last.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shift_mask: symmetric, zero diagonal, two values, data independent") {
  for (bool tri : {false, true}) {
    for (int s : {2, 4, 6}) {
      const auto layout = tri ? WindowLayout::tri(16, 16, 8, s, 2) : WindowLayout::rect(16, 16, 8, s, 2);
      const auto mask = shift_mask(layout);
      for (int g = 0; g < layout.groups(); ++g) {
        const auto m = mask.matrix<double>(g);
        CHECK(m == m.transpose());
        CHECK(m.diagonal().isZero());
        for (Index k = 0; k < m.size(); ++k) {
          const double v = m.data()[k];
          CHECK((v == 0.0 || v == kMaskSentinel));
        }
      }
      CHECK(shift_mask(layout).regions() == mask.regions());
    }
  }
}

TEST_CASE("sparse_gather / sparse_scatter") {
  const auto fm = random_map(1, 8, 8, 2, 9);
  const auto subs = sparse_gather(fm, 2);
  REQUIRE(subs.size() == 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const auto& sub = subs[static_cast<std::size_t>(a * 2 + b)];
      CHECK(sub.shape() == Shape{1, 4, 4, 2});
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int c = 0; c < 2; ++c) CHECK(sub.at(0, i, j, c) == fm.at(0, 2 * i + a, 2 * j + b, c));
    }
  const auto one = sparse_gather(fm, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == fm);
  for (int interval : {2, 4}) {
    const auto big = random_map(2, 16, 16, 3, 10 + interval);
    CHECK(sparse_scatter(sparse_gather(big, interval), interval) == big);
  }
  CHECK_THROWS_AS(sparse_gather(random_map(1, 6, 6, 1, 1), 4), InvalidArgument);
}

TEST_CASE("sparse layout equals dense layout on each sub-map") {
  const auto fm = random_map(1, 32, 32, 2, 11);
  const auto subs = sparse_gather(fm, 2);
  const auto sparse = partition(fm, WindowLayout::tri(32, 32, 8, 4, 2));
  const Index per_sub = sparse.data.size() / 4;
  for (int k = 0; k < 4; ++k) {
    const auto dense = tri_partition(subs[static_cast<std::size_t>(k)], 8, 4);
    CHECK(dense.data.values() == sparse.data.values().segment(k * per_sub, per_sub));
  }
}

TEST_CASE("overlap_unfold geometry") {
  const auto g = unfold_geometry(16, 0.5);
  CHECK(g.extent == 24);
  CHECK(g.padding == 4);
  CHECK(overlap_unfold(random_map(1, 32, 32, 1, 12), 16, 0.5).shape() == Shape{4, 576, 1});
  CHECK_THROWS_AS(unfold_geometry(5, 0.5), InvalidArgument);
}

TEST_CASE("overlap_unfold: R=4, k=0.5 window (0,0) covers [-1,5)^2") {
  const auto idx = unfold_index(1, 8, 8, 4, 0.5);
  REQUIRE(idx->size() == 4u * 36u);
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 6; ++v) {
      const int i = u - 1, j = v - 1;
      const Index expected = (i < 0 || j < 0) ? -1 : i * 8 + j;
      CHECK((*idx)[static_cast<std::size_t>(u * 6 + v)] == expected);
    }
  // Window (1,1) starts at padded coordinate (3,3) and runs off the far edge.
  const std::size_t base = 3 * 36;
  CHECK((*idx)[base] == 3 * 8 + 3);
  CHECK((*idx)[base + 35] == -1);
  const auto win = overlap_unfold(random_map(1, 8, 8, 1, 13), 4, 0.5);
  CHECK(win.shape() == Shape{4, 36, 1});
  CHECK(win[0] == 0.0);
}

TEST_CASE("overlap_unfold with k=0 equals rect_partition") {
  const auto fm = random_map(2, 16, 16, 3, 14);
  CHECK(overlap_unfold(fm, 8, 0.0) == rect_partition(fm, 8, 0).data);
  CHECK(overlap_unfold(fm, 4, 0.0) == rect_partition(fm, 4, 0).data);
}

TEST_CASE("unfold wrap mode reads the torus") {
  const auto idx = unfold_index(1, 8, 8, 4, 0.5, true);
  CHECK((*idx)[0] == 7 * 8 + 7);
  CHECK(std::none_of(idx->begin(), idx->end(), [](Index v) { return v < 0; }));
}

TEST_CASE("layouts cover every pixel exactly once") {
  for (bool tri : {false, true})
    for (int s : {0, 4, 8, 12}) {
      const auto l = tri ? WindowLayout::tri(32, 32, 16, s, 2) : WindowLayout::rect(32, 32, 8, s % 8, 2);
      std::vector<int> seen(32 * 32, 0);
      for (int g = 0; g < l.groups(); ++g)
        for (int t = 0; t < l.tokens(); ++t) {
          const auto [i, j] = l.pixel(g, t);
          ++seen[static_cast<std::size_t>(i * 32 + j)];
          CHECK(l.slot(i, j) == WindowLayout::Slot{g, t});
        }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
}
