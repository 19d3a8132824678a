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

#include "cfat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

namespace cfat {

namespace {

void require_image(const Image& img, const char* op) {
  require(img.rank() == 3 && img.dim(0) > 0 && img.dim(1) > 0 && img.dim(2) > 0,
          std::string(op) + ": expected an H x W x C image, got " + to_string(img.shape()));
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace

// ---------------------------------------------------------------------------

Image augment_image(const Image& img, int mode) {
  require_image(img, "augment");
  require(mode >= 0 && mode < 8, "augment: mode must be in 0..7");
  Image cur = img;
  if (mode >= 4) {
    const Index H = cur.dim(0), W = cur.dim(1), C = cur.dim(2);
    Image out(cur.shape());
    for (Index i = 0; i < H; ++i)
      for (Index j = 0; j < W; ++j)
        for (Index c = 0; c < C; ++c) out[(i * W + j) * C + c] = cur[(i * W + (W - 1 - j)) * C + c];
    cur = std::move(out);
  }
  for (int r = 0; r < mode % 4; ++r) {
    // Counter-clockwise quarter turn: out(i, j) = in(j, W - 1 - i).
    const Index H = cur.dim(0), W = cur.dim(1), C = cur.dim(2);
    Image out({W, H, C});
    for (Index i = 0; i < W; ++i)
      for (Index j = 0; j < H; ++j)
        for (Index c = 0; c < C; ++c) out[(i * H + j) * C + c] = cur[(j * W + (W - 1 - i)) * C + c];
    cur = std::move(out);
  }
  return cur;
}

SamplePair augment(const SamplePair& pair, int mode) {
  return {augment_image(pair.lr, mode), augment_image(pair.hr, mode)};
}

int compose_modes(int first, int second) {
  require(first >= 0 && first < 8 && second >= 0 && second < 8, "compose_modes: modes must be in 0..7");
  const int r1 = first % 4, f1 = first / 4, r2 = second % 4, f2 = second / 4;
  // R^r2 F^f2 R^r1 F^f1 = R^(r2 +- r1) F^(f1 xor f2), since F R = R^-1 F.
  const int r = (r2 + (f2 ? 4 - r1 : r1)) % 4;
  return r + 4 * (f1 ^ f2);
}

int inverse_mode(int mode) {
  require(mode >= 0 && mode < 8, "inverse_mode: mode must be in 0..7");
  return mode >= 4 ? mode : (4 - mode) % 4;
}

// ---------------------------------------------------------------------------

double cubic_kernel(double x, double a) {
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

ResampleTaps bicubic_taps(int out_index, int in_size, int factor) {
  require(factor >= 1 && in_size >= 1, "bicubic: invalid sizes");
  const double center = (out_index + 0.5) * factor - 0.5;
  const double support = 2.0 * factor;
  const int lo = static_cast<int>(std::floor(center - support));
  const int hi = static_cast<int>(std::ceil(center + support));
  ResampleTaps taps;
  double total = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double w = cubic_kernel((center - j) / factor);
    if (w == 0.0) continue;
    taps.index.push_back(std::clamp(j, 0, in_size - 1));
    taps.weight.push_back(w);
    total += w;
  }
  for (double& w : taps.weight) w /= total;
  return taps;
}

Image bicubic_downscale(const Image& hr, int factor) {
  require_image(hr, "bicubic_downscale");
  require(factor >= 1, "bicubic_downscale: factor must be positive");
  const Index H = hr.dim(0), W = hr.dim(1), C = hr.dim(2);
  require(H % factor == 0 && W % factor == 0,
          "bicubic_downscale: size " + to_string(hr.shape()) + " not divisible by " + std::to_string(factor));
  const Index h = H / factor, w = W / factor;
  std::vector<ResampleTaps> col_taps, row_taps;
  for (Index j = 0; j < w; ++j) col_taps.push_back(bicubic_taps(static_cast<int>(j), static_cast<int>(W), factor));
  for (Index i = 0; i < h; ++i) row_taps.push_back(bicubic_taps(static_cast<int>(i), static_cast<int>(H), factor));

  // Horizontal pass H x w, then vertical pass h x w.
  std::vector<double> tmp(static_cast<std::size_t>(H * w * C), 0.0);
  for (Index i = 0; i < H; ++i)
    for (Index j = 0; j < w; ++j) {
      const auto& t = col_taps[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < t.index.size(); ++k)
        for (Index c = 0; c < C; ++c)
          tmp[static_cast<std::size_t>((i * w + j) * C + c)] += t.weight[k] * hr[(i * W + t.index[k]) * C + c];
    }
  Image out({h, w, C});
  for (Index i = 0; i < h; ++i) {
    const auto& t = row_taps[static_cast<std::size_t>(i)];
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k)
          acc += t.weight[k] * tmp[static_cast<std::size_t>((t.index[k] * w + j) * C + c)];
        out[(i * w + j) * C + c] = static_cast<float>(acc);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------

Tensor<double> rgb_to_y(const Image& img) {
  require_image(img, "rgb_to_y");
  require(img.dim(2) == 3, "rgb_to_y: expected 3 channels");
  const Index H = img.dim(0), W = img.dim(1);
  Tensor<double> y({H, W});
  for (Index i = 0; i < H * W; ++i) {
    y[i] = 16.0 + 65.481 * double(img[3 * i]) + 128.553 * double(img[3 * i + 1]) + 24.966 * double(img[3 * i + 2]);
  }
  return y;
}

namespace {

Tensor<double> shaved_y(const Image& img, int shave, const char* op) {
  const Tensor<double> y = rgb_to_y(img);
  const Index H = y.dim(0), W = y.dim(1);
  require(shave >= 0 && 2 * shave < H && 2 * shave < W, std::string(op) + ": shave leaves no pixels");
  Tensor<double> out({H - 2 * shave, W - 2 * shave});
  for (Index i = 0; i < out.dim(0); ++i)
    for (Index j = 0; j < out.dim(1); ++j) out[i * out.dim(1) + j] = y[(i + shave) * W + j + shave];
  return out;
}

void require_same(const Image& a, const Image& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": size mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

}  // namespace

double psnr_y(const Image& sr, const Image& hr, int shave) {
  require_same(sr, hr, "psnr_y");
  const Tensor<double> a = shaved_y(sr, shave, "psnr_y"), b = shaved_y(hr, shave, "psnr_y");
  const double mse = (a.values() - b.values()).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim_plane(const Tensor<double>& x, const Tensor<double>& y) {
  require(x.rank() == 2 && x.shape() == y.shape(), "ssim: planes must match");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  const Index H = x.dim(0), W = x.dim(1);
  require(H >= kWin && W >= kWin, "ssim: image smaller than the 11 x 11 window");
  double g[kWin];
  double gs = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = std::pow(0.01 * 255.0, 2), c2 = std::pow(0.03 * 255.0, 2);

  const Index oh = H - kWin + 1, ow = W - kWin + 1;
  // Separable filtering of x, y, x^2, y^2, xy over the valid region.
  auto filter = [&](auto&& at) {
    RowMatrix<double> rows(H, ow);
    for (Index i = 0; i < H; ++i)
      for (Index j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int k = 0; k < kWin; ++k) acc += g[k] * at(i, j + k);
        rows(i, j) = acc;
      }
    RowMatrix<double> out(oh, ow);
    for (Index i = 0; i < oh; ++i)
      for (Index j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int k = 0; k < kWin; ++k) acc += g[k] * rows(i + k, j);
        out(i, j) = acc;
      }
    return out;
  };
  const auto X = [&](Index i, Index j) { return x[i * W + j]; };
  const auto Y = [&](Index i, Index j) { return y[i * W + j]; };
  const RowMatrix<double> mx = filter(X), my = filter(Y);
  const RowMatrix<double> xx = filter([&](Index i, Index j) { return X(i, j) * X(i, j); });
  const RowMatrix<double> yy = filter([&](Index i, Index j) { return Y(i, j) * Y(i, j); });
  const RowMatrix<double> xy = filter([&](Index i, Index j) { return X(i, j) * Y(i, j); });
  double total = 0.0;
  for (Index i = 0; i < oh; ++i)
    for (Index j = 0; j < ow; ++j) {
      const double ux = mx(i, j), uy = my(i, j);
      const double vx = xx(i, j) - ux * ux, vy = yy(i, j) - uy * uy, cxy = xy(i, j) - ux * uy;
      total += ((2 * ux * uy + c1) * (2 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
  return total / static_cast<double>(oh * ow);
}

double ssim_y(const Image& sr, const Image& hr, int shave) {
  require_same(sr, hr, "ssim_y");
  return ssim_plane(shaved_y(sr, shave, "ssim_y"), shaved_y(hr, shave, "ssim_y"));
}

// ---------------------------------------------------------------------------

Texture parse_texture(const std::string& name) {
  if (name == "checker") return Texture::Checker;
  if (name == "gradient") return Texture::Gradient;
  if (name == "noise") return Texture::Noise;
  if (name == "mixed") return Texture::Mixed;
  throw InvalidArgument("unknown texture '" + name + "' (expected checker, gradient, noise or mixed)");
}

namespace {

// White noise smoothed by three box passes per axis (roughly Gaussian),
// rescaled to [0, 1].
std::vector<double> smooth_noise(int H, int W, int radius, std::mt19937_64& rng) {
  std::vector<double> a(static_cast<std::size_t>(H * W));
  for (double& v : a) v = unit_uniform(rng);
  std::vector<double> b(a.size());
  auto at = [](int p, int n) { return std::clamp(p, 0, n - 1); };
  for (int pass = 0; pass < 3; ++pass) {
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += a[static_cast<std::size_t>(i * W + at(j + d, W))];
        b[static_cast<std::size_t>(i * W + j)] = s / (2 * radius + 1);
      }
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        double s = 0.0;
        for (int d = -radius; d <= radius; ++d) s += b[static_cast<std::size_t>(at(i + d, H) * W + j)];
        a[static_cast<std::size_t>(i * W + j)] = s / (2 * radius + 1);
      }
  }
  const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
  const double lo = *mn, span = std::max(*mx - *mn, 1e-12);
  for (double& v : a) v = (v - lo) / span;
  return a;
}

}  // namespace

Image synthetic_image(Texture kind, int height, int width, std::uint64_t seed) {
  require(height > 0 && width > 0, "synthetic_image: size must be positive");
  std::mt19937_64 rng(seed);
  Image img({height, width, 3});
  double base[3], other[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.15 + 0.3 * unit_uniform(rng);
    other[c] = 0.55 + 0.3 * unit_uniform(rng);
  }
  const int cell = 4 + static_cast<int>(uniform_below(rng, 9));
  const double phase = 2.0 * std::numbers::pi * unit_uniform(rng);
  std::vector<double> noise[3];
  if (kind == Texture::Noise || kind == Texture::Mixed) {
    for (auto& n : noise) n = smooth_noise(height, width, std::max(1, std::min(height, width) / 16), rng);
  }
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const double u = (i + 0.5) / height, v = (j + 0.5) / width;
      const std::size_t p = static_cast<std::size_t>(i * width + j);
      for (int c = 0; c < 3; ++c) {
        double val = 0.0;
        switch (kind) {
          case Texture::Checker:
            val = ((i / cell + j / cell) % 2) ? other[c] : base[c];
            break;
          case Texture::Gradient:
            val = base[c] + (other[c] - base[c]) * (c == 0 ? u : c == 1 ? v : 0.5 * (u + v));
            break;
          case Texture::Noise:
            val = 0.1 + 0.8 * noise[c][p];
            break;
          case Texture::Mixed:
            val = 0.45 * (base[c] + (other[c] - base[c]) * (c == 1 ? u : v)) +
                  0.15 * (1.0 + std::sin(2.0 * std::numbers::pi * (u + 2.0 * v) * 1.5 + phase + c)) +
                  0.25 * noise[c][p];
            break;
        }
        img[p * 3 + static_cast<std::size_t>(c)] = static_cast<float>(std::clamp(val, 0.0, 1.0));
      }
    }
  return img;
}

// ---------------------------------------------------------------------------

PairSampler::PairSampler(std::vector<Image> hr_images, int scale, int lr_patch, bool augment, std::uint64_t seed)
    : images_(std::move(hr_images)), scale_(scale), patch_(lr_patch), augment_(augment), rng_(seed) {
  require(!images_.empty(), "sampler: no training images");
  require(scale >= 1 && lr_patch >= 1, "sampler: invalid scale or patch size");
  const Index need = Index(scale) * lr_patch;
  for (const Image& img : images_) {
    require_image(img, "sampler");
    require(img.dim(2) == 3, "sampler: images must be RGB");
    require(img.dim(0) >= need && img.dim(1) >= need,
            "sampler: image " + to_string(img.shape()) + " smaller than the HR patch " + std::to_string(need));
  }
}

SamplePair PairSampler::next() {
  const Image& img = images_[uniform_below(rng_, images_.size())];
  const Index need = Index(scale_) * patch_;
  const Index H = img.dim(0), W = img.dim(1);
  const Index y0 = static_cast<Index>(uniform_below(rng_, static_cast<std::uint64_t>(H - need + 1)));
  const Index x0 = static_cast<Index>(uniform_below(rng_, static_cast<std::uint64_t>(W - need + 1)));
  Image hr({need, need, 3});
  for (Index i = 0; i < need; ++i)
    for (Index j = 0; j < need; ++j)
      for (Index c = 0; c < 3; ++c) hr[(i * need + j) * 3 + c] = img[((y0 + i) * W + x0 + j) * 3 + c];
  if (augment_) hr = augment_image(hr, static_cast<int>(uniform_below(rng_, 8)));
  return {bicubic_downscale(hr, scale_), std::move(hr)};
}

std::pair<Tensor<float>, Tensor<float>> PairSampler::batch(int batch) {
  require(batch >= 1, "sampler: batch must be positive");
  std::vector<Image> lr, hr;
  for (int b = 0; b < batch; ++b) {
    SamplePair p = next();
    lr.push_back(std::move(p.lr));
    hr.push_back(std::move(p.hr));
  }
  return {stack(lr), stack(hr)};
}

Tensor<float> stack(const std::vector<Image>& images) {
  require(!images.empty(), "stack: no images");
  const Shape s = images.front().shape();
  Tensor<float> out({static_cast<Index>(images.size()), s[0], s[1], s[2]});
  const Index n = shape_size(s);
  for (std::size_t b = 0; b < images.size(); ++b) {
    require(images[b].shape() == s, "stack: images differ in size");
    out.values().segment(static_cast<Index>(b) * n, n) = images[b].values();
  }
  return out;
}

Image unstack(const Tensor<float>& batch, Index b) {
  require(batch.rank() == 4 && b >= 0 && b < batch.dim(0), "unstack: invalid batch index");
  Image out({batch.dim(1), batch.dim(2), batch.dim(3)});
  out.values() = batch.values().segment(b * out.size(), out.size());
  return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate(const ModelConfig& model) const {
  require(lr_patch > 0 && lr_patch % model.pad_multiple() == 0,
          "train: LR patch size must be a multiple of " + std::to_string(model.pad_multiple()));
  require(batch >= 1 && steps >= 1, "train: batch and steps must be positive");
  require(lr > 0.0 && std::isfinite(lr), "train: learning rate must be positive");
  double prev = 0.0;
  for (double m : milestones) {
    require(m > prev && m < 1.0, "train: milestones must be strictly increasing in (0, 1)");
    prev = m;
  }
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0, "train: invalid Adam constants");
}

double learning_rate(const TrainConfig& tc, int step) {
  double lr = tc.lr;
  for (double m : tc.milestones) {
    if (static_cast<double>(step) >= m * tc.steps) lr *= 0.5;
  }
  return lr;
}

Adam::Adam(const ParamStore<float>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.push_back(Vector<float>::Zero(p.value.size()));
    v_.push_back(Vector<float>::Zero(p.value.size()));
  }
}

void Adam::step(ParamStore<float>& params, double lr) {
  require(params.size() == m_.size(), "adam: parameter set changed");
  ++t_;
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const double c1 = 1.0 - std::pow(beta1_, t_), c2 = 1.0 - std::pow(beta2_, t_);
  const float step = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(eps_);
  std::size_t i = 0;
  for (auto& p : params) {
    Vector<float>& m = m_[i];
    Vector<float>& v = v_[i];
    ++i;
    if (p.grad.empty()) continue;
    const auto& g = p.grad.values();
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    p.value.values().array() -= step * m.array() / ((v.array() * inv_c2).sqrt() + eps);
  }
}

std::vector<LogRow> train(const Model& model, ParamStore<float>& params, PairSampler& sampler, const TrainConfig& tc,
                          const std::function<void(const LogRow&)>& on_step) {
  tc.validate(model.config);
  Adam adam(params, tc.beta1, tc.beta2, tc.eps);
  std::vector<LogRow> log;
  log.reserve(static_cast<std::size_t>(tc.steps));
  for (int step = 0; step < tc.steps; ++step) {
    auto [lr_batch, hr_batch] = sampler.batch(tc.batch);
    params.zero_grad();
    double loss_value = 0.0;
    {
      Tape<float> tape;
      Binder<float> bind(params, &tape);
      const Var<float> pred = forward(model, bind, constant(std::move(lr_batch)));
      const Var<float> loss = l1_loss(pred, hr_batch);
      loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw NumericFailure("train: non-finite loss " + std::to_string(loss_value) + " at step " +
                             std::to_string(step));
      }
      tape.backward(loss);
    }
    const double lr = learning_rate(tc, step);
    adam.step(params, lr);
    log.push_back({step, loss_value, lr});
    if (on_step) on_step(log.back());
  }
  return log;
}

void write_log_csv(const std::string& path, const std::vector<LogRow>& log) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path);
  out << "step,loss,lr\n" << std::setprecision(9);
  for (const LogRow& r : log) out << r.step << ',' << r.loss << ',' << r.lr << '\n';
  require(static_cast<bool>(out), "write failed: " + path);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path);
  out << "image,psnr_y,ssim_y\n" << std::fixed << std::setprecision(6);
  for (const MetricRow& r : rows) {
    out << r.image << ',';
    if (std::isinf(r.psnr_y)) out << "inf";
    else out << r.psnr_y;
    out << ',' << r.ssim_y << '\n';
  }
  require(static_cast<bool>(out), "write failed: " + path);
}

Image upscale(const Model& model, ParamStore<float>& params, const Image& lr) {
  require_image(lr, "upscale");
  Tensor<float> out = infer(model, params, stack({lr}));
  out.values() = out.values().cwiseMax(0.0f).cwiseMin(1.0f);
  return unstack(out, 0);
}

}  // namespace cfat
