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

// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.

#include "cli.hpp"
#include "cfat/attention.hpp"
#include "cfat/checks.hpp"
#include "cfat/model.hpp"
#include "cfat/pipeline.hpp"
#include "cfat/profiler.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

using namespace cfat;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

Tensor<double> random_map(Index b, Index h, Index w, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({b, h, w, c}, rng);
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<int> pixel_to_group(const WindowLayout& layout, int h, int w) {
  std::vector<int> map(static_cast<std::size_t>(h) * w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) map[static_cast<std::size_t>(i) * w + j] = layout.slot(i, j).group;
  return map;
}

// partition(fm) rearranges pixels into the windows of slot(i, j) and
// reverse undoes it; both are checked exactly.
Verdict geometry_roundtrip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  int inputs = 0;
  bool ok = true;
  for (int m : {4, 8, 16, 32})
    for (Scheme scheme : {Scheme::Rect, Scheme::Tri, Scheme::SparseRect, Scheme::SparseTri})
      for (int s : {0, m / 4, m / 2, 3 * m / 4}) {
        const int interval = is_sparse(scheme) ? 2 : 1;
        const int h = m * interval * (1 + static_cast<int>(rng() % 3));
        const int w = m * interval * (1 + static_cast<int>(rng() % 3));
        const WindowLayout layout({scheme, m, s, interval, h, w});
        const auto fm = random_tensor({2, h, w, 3}, rng);
        const auto groups = partition(fm, layout);
        ok = ok && reverse(groups) == fm;
        // Each pixel lands exactly at its slot.
        for (int i = 0; i < h && ok; i += 1 + static_cast<int>(rng() % 5))
          for (int j = 0; j < w && ok; j += 1 + static_cast<int>(rng() % 5)) {
            const auto slot = layout.slot(i, j);
            ok = groups.data[(Index(slot.group) * layout.tokens() + slot.token) * 3] == fm.at(0, i, j, 0);
          }
        ++inputs;
      }
  for (int m = 2; m <= 64 && ok; m += 2) {
    int count[4] = {0, 0, 0, 0};
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) ++count[static_cast<int>(tri_classify(i, j, m))];
    for (int c : count) ok = ok && c == m * m / 4;
  }
  const double t = since(t0);
  return {ok && inputs >= 50 && t < 10.0, fmt("%d inputs exact, M^2/4 for M = 2..64, %.2f s", inputs, t)};
}

Verdict shift_uniqueness() {
  const int n = 64;
  std::set<std::vector<int>> tri;
  for (int s : {0, 8, 16, 24}) tri.insert(pixel_to_group(WindowLayout::tri(n, n, 32, s), n, n));
  const bool rect_same = pixel_to_group(WindowLayout::rect(n, n, 16, 16), n, n) ==
                         pixel_to_group(WindowLayout::rect(n, n, 16, 0), n, n);
  const bool rect_distinct = pixel_to_group(WindowLayout::rect(n, n, 16, 8), n, n) !=
                             pixel_to_group(WindowLayout::rect(n, n, 16, 0), n, n);
  const bool ok = tri.size() == 4 && rect_same && rect_distinct;
  return {ok, fmt("tri distinct maps %zu/4, rect s=16 %s s=0", tri.size(), rect_same ? "==" : "!=")};
}

struct Attn {
  ParamStore<double> store;
  AttnParams p;
  Attn(int channels, int heads, int tq, int tkv, std::uint64_t seed) {
    Initializer init(seed);
    p = add_attention_params(store, "attn", channels, heads, tq, tkv, init);
    std::mt19937_64 rng(seed + 1000);
    for (auto& param : store) param.value = random_tensor(param.value.shape(), rng, -0.6, 0.6);
  }
};

Verdict attention_oracle() {
  const auto t0 = Clock::now();
  const int C = 16;
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (Scheme scheme : {Scheme::Rect, Scheme::Tri, Scheme::SparseRect, Scheme::SparseTri}) {
      const int m = is_tri(scheme) ? 8 : 4;
      const int interval = is_sparse(scheme) ? 2 : 1;
      const int n = 2 * m * interval;
      for (bool masked : {false, true}) {
        const WindowLayout layout({scheme, m, masked ? m / 2 : 0, interval, n, n});
        Attn a(C, 2, layout.tokens(), layout.tokens(), seed * 13 + 1);
        const auto mask = masked ? shift_mask(layout) : AttentionMask();
        const auto groups = partition(random_map(1, n, n, C, seed * 7 + 3), layout).data;
        Binder<double> bind(a.store);
        const auto fast = w_msa(bind, constant(groups), mask, a.p).value();
        const auto slow = oracle::naive_attention(groups, mask, attention_weights(a.store, a.p));
        worst = std::max(worst, max_abs_diff(fast, slow));
        ++cases;
      }
    }
  const double t = since(t0);
  return {worst <= 1e-5 && t < 60.0, fmt("%d cases, max |diff| %.3g, %.2f s", cases, worst, t)};
}

Verdict ocfa_degeneration() {
  double worst = 0.0;
  for (int window : {4, 8, 16}) {
    const int n = 2 * window;
    Attn a(16, 2, window * window, window * window, 40 + window);
    Binder<double> bind(a.store);
    const auto fm = constant(random_map(2, n, n, 16, 50 + window));
    const auto k0 = ocfa(bind, fm, window, 0.0, a.p).value();
    const auto plain = window_msa(bind, fm, WindowLayout::rect(n, n, window, 0), AttentionMask(), a.p).value();
    worst = std::max(worst, max_abs_diff(k0, plain));
  }
  return {worst <= 1e-6, fmt("R = 4, 8, 16: max |diff| %.3g", worst)};
}

Verdict gradient_check() {
  const auto t0 = Clock::now();
  ParamStore<double> store;
  const Model model = build(ModelConfig::tiny(), store, 0);
  std::mt19937_64 rng(5);
  const auto x = random_tensor({1, 16, 16, 3}, rng, 0.0, 1.0);
  Binder<double> b0(store);
  const auto target = offset_target(forward(model, b0, constant(x)).value(), rng);
  GradCheckOptions o;
  o.samples = 500;
  o.eps = 1e-4;
  o.seed = 6;
  const auto r = grad_check(
      store, [&](Binder<double>& b) { return l1_loss(forward(model, b, constant(x)), target); }, o);
  const double t = since(t0);
  return {r.max_rel_error < 1e-3 && r.coordinates == 500 && t < 600.0,
          fmt("%d coords, max rel %.3g (%s), %.1f s", r.coordinates, r.max_rel_error, r.worst_param.c_str(), t)};
}

Verdict complexity_formulas() {
  using boost::multiprecision::cpp_int;
  auto big = [](Count c) -> cpp_int {
    cpp_int r = static_cast<std::uint64_t>(c >> 64);
    return (r << 64) + static_cast<std::uint64_t>(c);
  };
  const cpp_int H = 64, W = 64, C = 180, L = 16, S = 2;
  const cpp_int msa = 4 * H * W * C * C + 2 * (H * W) * (H * W) * C;
  const cpp_int dense = 4 * H * W * C * C + 2 * H * W * L * L * C;
  const cpp_int sparse = 4 * H * W * C * C + 2 * (H * W / S) * (H * W / S) * C;
  const bool ok = big(msa_cost(64, 64, 180)) == msa && msa == 6570639360 &&
                  big(dense_window_cost(64, 64, 180, 16)) == dense && dense == 908328960 &&
                  big(sparse_window_cost(64, 64, 180, 2)) == sparse && sparse == 2040791040;
  return {ok, to_string(msa_cost(64, 64, 180)) + " / " + to_string(dense_window_cost(64, 64, 180, 16)) + " / " +
                  to_string(sparse_window_cost(64, 64, 180, 2))};
}

Verdict overfit() {
  const auto t0 = Clock::now();
  const ModelConfig cfg = ModelConfig::tiny();
  ParamStore<double> init;
  const Model model = build(cfg, init, 1);
  auto params = init.cast<float>();
  const Image hr = synthetic_image(Texture::Mixed, 128, 128, 7);
  PairSampler sampler({hr}, 4, 32, false, 1);
  TrainConfig tc;
  tc.steps = 2000;
  tc.lr = 2e-4;
  const auto log = train(model, params, sampler, tc);
  std::vector<double> windows;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (i % 200 == 0) windows.push_back(0.0);
    windows.back() += log[i].loss / 200.0;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < windows.size(); ++i) monotone = monotone && windows[i] <= windows[i - 1];
  const double p = psnr_y(upscale(model, params, bicubic_downscale(hr, 4)), hr, 4);
  const double t = since(t0);
  std::string trail;
  for (double w : windows) trail += fmt(" %.4g", w);
  return {p > 40.0 && monotone && t < 1200.0,
          fmt("PSNR_Y %.2f dB, windows %s, %.0f s;", p, monotone ? "non-increasing" : "NOT monotone", t) + trail};
}

Verdict metrics() {
  Image base = Tensor<float>::constant({48, 48, 3}, 0.3f);
  Image off = base;
  off.values().array() += 1.0f / 219.0f;
  const double p = psnr_y(off, base, 4);
  // Scripted reference: tests/oracles/metrics_reference.py.
  Image ramp({48, 48, 3}), blend({48, 48, 3});
  for (std::uint32_t i = 0; i < 48; ++i)
    for (std::uint32_t j = 0; j < 48; ++j)
      for (std::uint32_t c = 0; c < 3; ++c) {
        const std::uint32_t h = (i * 73856093u) ^ (j * 19349663u) ^ (c * 83492791u);
        const Index k = (static_cast<Index>(i) * 48 + j) * 3 + c;
        ramp[k] = static_cast<float>(j) / 47.0f;
        blend[k] = 0.5f * ramp[k] + 0.5f * (static_cast<float>(h % 1000u) / 999.0f);
      }
  const double ref_p = psnr_y(blend, ramp, 4), ref_s = ssim_y(blend, ramp, 4);
  const double self = ssim_y(ramp, ramp, 4);
  const bool ok = std::abs(p - 48.13) <= 0.01 && std::abs(self - 1.0) < 1e-12 && std::abs(ref_p - 17.541336) < 0.01 &&
                  std::abs(ref_s - 0.201186) < 0.001;
  return {ok, fmt("offset %.4f dB, SSIM(x,x) %.6f, ref %.4f dB / %.5f", p, self, ref_p, ref_s)};
}

Verdict shapes_and_equivariance() {
  const auto t0 = Clock::now();
  const ModelConfig cfg = ModelConfig::tiny();
  ParamStore<double> store;
  const Model model = build(cfg, store, 2);
  const int sizes[10][2] = {{7, 9}, {13, 5}, {17, 17}, {1, 3}, {23, 11}, {31, 33}, {5, 40}, {19, 2}, {9, 27}, {37, 14}};
  int good = 0;
  std::mt19937_64 rng(3);
  for (const auto& hw : sizes) {
    const auto y = infer(model, store, random_tensor({1, hw[0], hw[1], 3}, rng, 0.0, 1.0));
    good += y.shape() == Shape{1, cfg.scale * hw[0], cfg.scale * hw[1], 3};
  }
  ModelConfig circ = cfg;
  circ.circular = true;
  ParamStore<double> cs;
  const Model cm = build(circ, cs, 4);
  const int period = circ.pad_multiple();
  const auto x = random_tensor({1, 2 * period, 2 * period, 3}, rng, 0.0, 1.0);
  const auto y = infer(cm, cs, x);
  const auto ys = infer(cm, cs, cyclic_shift(x, period, period));
  const double err = max_abs_diff(cyclic_shift(y, circ.scale * period, circ.scale * period), ys);
  return {good == 10 && err <= 1e-5,
          fmt("%d/10 sizes x%d, shift by %d: max |diff| %.3g, %.1f s", good, cfg.scale, period, err, since(t0))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  const auto dir = fs::temp_directory_path() / "cfat_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& name) {
    std::ostringstream out, err;
    return cli::run({"train", "--preset", "tiny", "--steps", "6", "--seed", "11", "--images", "2", "--out",
                     (dir / name).string(), "--quiet"},
                    out, err);
  };
  if (run("a.bin") != 0 || run("b.bin") != 0) return {false, "training failed"};
  const auto ca = slurp(dir / "a.bin"), cb = slurp(dir / "b.bin");
  const auto la = slurp(dir / "a.bin.log.csv"), lb = slurp(dir / "b.bin.log.csv");
  const bool ok = !ca.empty() && ca == cb && !la.empty() && la == lb;
  return {ok, fmt("checkpoint %zu bytes %s, log %zu bytes %s", ca.size(), ca == cb ? "identical" : "DIFFER", la.size(),
                  la == lb ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"geometry round trips", geometry_roundtrip},
      {"shift-mode uniqueness", shift_uniqueness},
      {"attention oracle", attention_oracle},
      {"ocfa k=0 degeneration", ocfa_degeneration},
      {"tiny model gradient check", gradient_check},
      {"complexity formulas", complexity_formulas},
      {"overfit sanity", overfit},
      {"metric correctness", metrics},
      {"shapes and equivariance", shapes_and_equivariance},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
