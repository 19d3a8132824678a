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

#pragma once

#include "cfat/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace cfat {

/// Images are H x W x C float tensors with values in [0, 1].
using Image = Tensor<float>;

struct SamplePair {
  Image lr;
  Image hr;
};

// ---------------------------------------------------------------------------
// Augmentation. Mode m = rot + 4 * flip: optional left-right flip, then rot
// quarter turns counter-clockwise. The eight modes form the dihedral group.

Image augment_image(const Image& img, int mode);
SamplePair augment(const SamplePair& pair, int mode);
int inverse_mode(int mode);
/// Mode equivalent to applying `first` and then `second`.
int compose_modes(int first, int second);

// ---------------------------------------------------------------------------
// Resampling.

/// Antialiased bicubic (a = -0.5) kernel stretched by r, edge-clamped taps,
/// weights normalized to sum to 1.
struct ResampleTaps {
  std::vector<int> index;  // clamped source indices
  std::vector<double> weight;
};
ResampleTaps bicubic_taps(int out_index, int in_size, int factor);
double cubic_kernel(double x, double a = -0.5);

Image bicubic_downscale(const Image& hr, int factor);

// ---------------------------------------------------------------------------
// Metrics on the BT.601 studio-swing luma, Y = 16 + 65.481 R + 128.553 G +
// 24.966 B, after shaving `shave` pixels from every border.

Tensor<double> rgb_to_y(const Image& img);
/// +infinity for identical inputs.
double psnr_y(const Image& sr, const Image& hr, int shave);
/// 11 x 11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, L = 255, mean
/// over the valid window positions.
double ssim_y(const Image& sr, const Image& hr, int shave);
/// Same statistics on an already converted luma plane.
double ssim_plane(const Tensor<double>& x, const Tensor<double>& y);

// ---------------------------------------------------------------------------
// Data.

enum class Texture { Checker, Gradient, Noise, Mixed };
Texture parse_texture(const std::string& name);

/// Procedural RGB texture, deterministic in `seed`.
Image synthetic_image(Texture kind, int height, int width, std::uint64_t seed);

/// Draws random (crop, augmentation) training pairs from HR images, with the
/// LR side synthesized by bicubic_downscale.
class PairSampler {
 public:
  PairSampler(std::vector<Image> hr_images, int scale, int lr_patch, bool augment, std::uint64_t seed);

  /// One pair; with a single image of exactly the patch size and no
  /// augmentation the same pair is returned every time.
  SamplePair next();
  /// Stacks `batch` pairs into B x h x w x 3 and B x rh x rw x 3 tensors.
  std::pair<Tensor<float>, Tensor<float>> batch(int batch);

 private:
  std::vector<Image> images_;
  int scale_, patch_;
  bool augment_;
  std::mt19937_64 rng_;
};

Tensor<float> stack(const std::vector<Image>& images);
Image unstack(const Tensor<float>& batch, Index b);

// ---------------------------------------------------------------------------
// Optimization.

struct TrainConfig {
  int lr_patch = 32;
  int batch = 1;
  int steps = 2000;
  double lr = 2e-4;
  std::vector<double> milestones{0.45, 0.70, 0.80, 0.90};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  void validate(const ModelConfig& model) const;
};

/// Base rate halved once for every milestone fraction already reached.
double learning_rate(const TrainConfig& tc, int step);

class Adam {
 public:
  Adam(const ParamStore<float>& params, double beta1, double beta2, double eps);
  void step(ParamStore<float>& params, double lr);
  int steps() const { return t_; }

 private:
  std::vector<Vector<float>> m_, v_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
};

struct LogRow {
  int step;
  double loss;
  double lr;
};

/// Runs `tc.steps` Adam steps on L1 loss. Throws NumericFailure on a
/// non-finite loss. `on_step` (optional) sees every log row.
std::vector<LogRow> train(const Model& model, ParamStore<float>& params, PairSampler& sampler, const TrainConfig& tc,
                          const std::function<void(const LogRow&)>& on_step = {});

void write_log_csv(const std::string& path, const std::vector<LogRow>& log);

struct MetricRow {
  std::string image;
  double psnr_y;
  double ssim_y;
};
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);

/// Upscales one image (H x W x 3) and clamps to [0, 1].
Image upscale(const Model& model, ParamStore<float>& params, const Image& lr);

}  // namespace cfat
