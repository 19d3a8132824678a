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

#include "cli.hpp"

#include "cfat/checks.hpp"
#include "cfat/image_io.hpp"
#include "cfat/pipeline.hpp"
#include "cfat/profiler.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cfat::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, std::string> split_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw UsageError("expected key=value, got '" + kv + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

// Model and training settings shared by subcommands: preset, then config
// file, then --set overrides. Keys prefixed with `train.` go to the
// training configuration.
struct Settings {
  std::string preset = "tiny";
  std::string config_path;
  std::vector<std::string> overrides;

  ModelConfig model;
  TrainConfig train;

  void apply(const std::string& key, const std::string& value) {
    if (key.rfind("train.", 0) == 0) {
      const std::string k = key.substr(6);
      std::istringstream in(value);
      auto number = [&](auto& field) {
        in >> field;
        if (!in || !in.eof()) throw InvalidArgument("config: '" + key + "' expects a number, got '" + value + "'");
      };
      if (k == "steps") number(train.steps);
      else if (k == "batch") number(train.batch);
      else if (k == "patch") number(train.lr_patch);
      else if (k == "lr") number(train.lr);
      else if (k == "seed") number(train.seed);
      else if (k == "beta1") number(train.beta1);
      else if (k == "beta2") number(train.beta2);
      else if (k == "milestones") {
        train.milestones.clear();
        std::string item;
        std::istringstream list(value);
        while (std::getline(list, item, ',')) {
          if (item.find_first_not_of(" \t") == std::string::npos) continue;
          train.milestones.push_back(std::stod(item));
        }
      } else {
        throw InvalidArgument("config: unknown key '" + key + "'");
      }
      return;
    }
    model.set(key, value);
  }

  void resolve() {
    model = ModelConfig::preset(preset);
    if (!config_path.empty()) {
      std::istringstream in(read_text(config_path));
      std::string line;
      while (std::getline(in, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto [k, v] = split_assignment(line);
        apply(k, v);
      }
    }
    for (const auto& kv : overrides) {
      const auto [k, v] = split_assignment(kv);
      apply(k, v);
    }
    model.validate();
  }
};

void add_settings(CLI::App* cmd, Settings& s) {
  cmd->add_option("--preset", s.preset, "Model preset: tiny or paper")->check(CLI::IsMember({"tiny", "paper"}));
  cmd->add_option("--config", s.config_path, "Flat key = value config file (model keys, train.* keys)");
  cmd->add_option("--set", s.overrides, "Override one config key, key=value (repeatable)");
}

struct LoadedModel {
  Model model;
  ParamStore<float> params;
};

LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_text(ck.config_text);
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw CheckpointError("checkpoint " + path + " has an invalid config: " + e.what());
  }
  ParamStore<double> skeleton;
  LoadedModel out{build(cfg, skeleton, 0), skeleton.cast<float>()};
  try {
    out.params.assign_from(ck.params);
  } catch (const InvalidArgument& e) {
    throw CheckpointError("checkpoint " + path + " does not match its config: " + e.what());
  }
  return out;
}

Image quantize(const Image& img) {
  Image q = img;
  for (Index i = 0; i < q.size(); ++i) q[i] = std::round(std::clamp(q[i], 0.0f, 1.0f) * 255.0f) / 255.0f;
  return q;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  Settings settings;
  std::string data_dir;
  std::string texture = "mixed";
  int synthetic_count = 1;
  int synthetic_size = 0;
  bool augment = false;
  std::string out = "checkpoint.bin";
  std::string log;
  int steps = -1, batch = -1, patch = -1;
  double lr = -1.0;
  long long seed = -1;
  bool quiet = false;
};

int cmd_train(TrainArgs& a, std::ostream& out) {
  Settings& s = a.settings;
  s.resolve();
  if (a.steps >= 0) s.train.steps = a.steps;
  if (a.batch >= 0) s.train.batch = a.batch;
  if (a.patch >= 0) s.train.lr_patch = a.patch;
  if (a.lr > 0) s.train.lr = a.lr;
  if (a.seed >= 0) s.train.seed = static_cast<std::uint64_t>(a.seed);
  s.train.validate(s.model);

  const int hr_patch = s.train.lr_patch * s.model.scale;
  std::vector<Image> images;
  if (!a.data_dir.empty()) {
    std::error_code ec;
    if (!fs::is_directory(a.data_dir, ec)) throw UsageError("data directory not found: " + a.data_dir);
    for (const auto& p : list_pngs(a.data_dir)) images.push_back(read_png(p));
    if (images.empty()) throw ImageIoError("no PNG files in " + a.data_dir);
  } else {
    const int size = a.synthetic_size > 0 ? a.synthetic_size : hr_patch;
    const Texture tex = parse_texture(a.texture);
    for (int i = 0; i < a.synthetic_count; ++i) {
      images.push_back(synthetic_image(tex, size, size, s.train.seed * 1000003ULL + static_cast<std::uint64_t>(i)));
    }
  }
  for (const Image& img : images) {
    if (img.dim(0) < hr_patch || img.dim(1) < hr_patch) {
      throw ImageIoError("training image " + to_string(img.shape()) + " smaller than the HR patch " +
                         std::to_string(hr_patch));
    }
  }

  ParamStore<double> init;
  const Model model = build(s.model, init, s.train.seed);
  ParamStore<float> params = init.cast<float>();
  PairSampler sampler(std::move(images), s.model.scale, s.train.lr_patch, a.augment, s.train.seed + 17);
  const int every = std::max(1, s.train.steps / 20);
  const auto log = train(model, params, sampler, s.train, [&](const LogRow& r) {
    if (!a.quiet && ((r.step + 1) % every == 0 || r.step + 1 == s.train.steps)) {
      out << "step " << r.step + 1 << "/" << s.train.steps << "  loss " << std::setprecision(6) << r.loss << "  lr "
          << r.lr << '\n';
    }
  });
  save_checkpoint(a.out, params, s.model.to_text());
  const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  write_log_csv(log_path, log);
  if (!a.quiet) out << "wrote " << a.out << " and " << log_path << '\n';
  return kOk;
}

// --- infer ------------------------------------------------------------------

struct InferArgs {
  std::string checkpoint, input, output, ref, metrics;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  LoadedModel m = load_model(a.checkpoint);
  const bool dir_mode = fs::is_directory(a.input);
  std::vector<std::string> inputs = dir_mode ? list_pngs(a.input) : std::vector<std::string>{a.input};
  if (dir_mode) fs::create_directories(a.output);
  std::vector<MetricRow> rows;
  for (const auto& in_path : inputs) {
    const std::string name = fs::path(in_path).filename().string();
    const std::string out_path = dir_mode ? (fs::path(a.output) / name).string() : a.output;
    const Image sr = quantize(upscale(m.model, m.params, read_png(in_path)));
    write_png(out_path, sr);
    if (!a.ref.empty()) {
      const std::string ref_path = fs::is_directory(a.ref) ? (fs::path(a.ref) / name).string() : a.ref;
      const Image hr = read_png(ref_path);
      if (hr.shape() != sr.shape()) {
        throw ImageIoError("reference " + ref_path + " is " + to_string(hr.shape()) + ", output is " +
                           to_string(sr.shape()));
      }
      const int r = m.model.config.scale;
      rows.push_back({name, psnr_y(sr, hr, r), ssim_y(sr, hr, r)});
    }
  }
  if (!a.ref.empty()) {
    if (!a.metrics.empty()) {
      write_metrics_csv(a.metrics, rows);
    } else {
      out << "image,psnr_y,ssim_y\n";
      for (const auto& r : rows) {
        out << r.image << ',' << (std::isinf(r.psnr_y) ? std::string("inf") : std::to_string(r.psnr_y)) << ','
            << r.ssim_y << '\n';
      }
    }
  }
  return kOk;
}

// --- check ------------------------------------------------------------------

struct CheckArgs {
  bool fast = false;
  std::string sabotage;
  std::uint64_t seed = 0;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  CheckOptions o;
  o.fast = a.fast;
  o.seed = a.seed;
  if (!a.sabotage.empty()) {
    if (a.sabotage != "grad") throw UsageError("unknown sabotage mode '" + a.sabotage + "' (expected grad)");
    o.sabotage_grad = true;
  }
  const auto results = run_checks(o);
  print_check_table(out, results);
  const bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
  out << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? kOk : kCheckFailed;
}

// --- profile ----------------------------------------------------------------

struct ProfileArgs {
  std::vector<std::uint64_t> H, W, C, L, S;
  std::vector<std::string> presets;
  std::string out;
};

int cmd_profile(const ProfileArgs& a, std::ostream& out) {
  for (const auto* v : {&a.H, &a.W, &a.C, &a.L, &a.S})
    for (auto x : *v)
      if (x == 0) throw UsageError("profile: all sweep values must be positive");
  std::vector<CostReport> reports;
  for (auto h : a.H)
    for (auto w : a.W)
      for (auto c : a.C) {
        reports.push_back({"msa", h, w, c, 0, 0, msa_cost(h, w, c)});
        for (auto l : a.L) {
          if (Count(l) * l <= Count(h) * w) reports.push_back({"dense_window", h, w, c, l, 0, dense_window_cost(h, w, c, l)});
        }
        for (auto sp : a.S) {
          if ((Count(h) * w) % sp == 0) reports.push_back({"sparse_window", h, w, c, 0, sp, sparse_window_cost(h, w, c, sp)});
        }
      }
  for (const auto& name : a.presets) {
    const ModelConfig cfg = ModelConfig::preset(name);
    for (auto h : a.H)
      for (auto w : a.W) {
        const ModelCost mc = model_macs(cfg, static_cast<int>(h), static_cast<int>(w));
        const auto C = static_cast<std::uint64_t>(cfg.channels);
        const auto L = static_cast<std::uint64_t>(cfg.rect_window);
        const auto S = static_cast<std::uint64_t>(cfg.interval);
        reports.push_back({"model_params_" + name, h, w, C, L, S, mc.params});
        reports.push_back({"model_macs_" + name, h, w, C, L, S, mc.macs});
      }
  }
  if (a.out.empty()) {
    write_cost_csv(out, reports);
  } else {
    std::ofstream f(a.out);
    if (!f) throw ImageIoError("cannot write " + a.out);
    write_cost_csv(f, reports);
  }
  return kOk;
}

// --- viz --------------------------------------------------------------------

struct VizArgs {
  std::string scheme = "tri";
  int window = 32;
  std::vector<int> shifts{0};
  int interval = 1;
  int height = 0, width = 0;
  std::string prefix = "layout";
};

float palette(int group, int channel) {
  std::uint32_t h = static_cast<std::uint32_t>(group) * 2654435761u + 0x9e3779b9u;
  h ^= h >> 15;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  return static_cast<float>(48 + ((h >> (8 * channel)) & 0xff) * 207 / 255) / 255.0f;
}

int cmd_viz(const VizArgs& a, std::ostream& out) {
  const Scheme scheme = parse_scheme(a.scheme);
  const int interval = is_sparse(scheme) ? std::max(2, a.interval) : 1;
  const int H = a.height > 0 ? a.height : 2 * interval * a.window;
  const int W = a.width > 0 ? a.width : H;
  for (int s : a.shifts) {
    const WindowLayout layout(LayoutSpec{scheme, a.window, s, interval, H, W});
    Image img({H, W, 3});
    const std::string base = a.prefix + "_" + a.scheme + "_M" + std::to_string(a.window) + "_s" + std::to_string(s);
    std::ofstream txt(base + ".txt");
    if (!txt) throw ImageIoError("cannot write " + base + ".txt");
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        const auto slot = layout.slot(i, j);
        txt << i << ' ' << j << ' ' << slot.group << ' ' << slot.token << '\n';
        for (int c = 0; c < 3; ++c) img[(Index(i) * W + j) * 3 + c] = palette(slot.group, c);
      }
    write_png(base + ".png", img);
    out << "wrote " << base << ".png and " << base << ".txt\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Triangular-window super-resolution transformer: train, infer, check, profile, viz", "cfat"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train on a PNG folder or synthetic textures");
  add_settings(train_cmd, train_args.settings);
  train_cmd->add_option("--data", train_args.data_dir, "Folder of HR PNGs (default: synthetic textures)");
  train_cmd->add_option("--texture", train_args.texture, "Synthetic texture: checker, gradient, noise, mixed");
  train_cmd->add_option("--images", train_args.synthetic_count, "Number of synthetic images");
  train_cmd->add_option("--image-size", train_args.synthetic_size, "Synthetic image side (default: HR patch)");
  train_cmd->add_flag("--augment,!--no-augment", train_args.augment, "Random dihedral augmentation");
  train_cmd->add_option("--steps", train_args.steps, "Training steps");
  train_cmd->add_option("--batch", train_args.batch, "Batch size");
  train_cmd->add_option("--patch", train_args.patch, "LR patch size");
  train_cmd->add_option("--lr", train_args.lr, "Base learning rate");
  train_cmd->add_option("--seed", train_args.seed, "Seed for init and sampling");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path");
  train_cmd->add_option("--log", train_args.log, "CSV log path (default: <out>.log.csv)");
  train_cmd->add_flag("--quiet", train_args.quiet, "No progress output");

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "Upscale PNG(s) with a checkpoint");
  infer_cmd->add_option("--checkpoint", infer_args.checkpoint, "Checkpoint path")->required();
  infer_cmd->add_option("--input", infer_args.input, "LR PNG or folder")->required();
  infer_cmd->add_option("--output", infer_args.output, "Output PNG or folder")->required();
  infer_cmd->add_option("--ref", infer_args.ref, "HR reference PNG or folder for PSNR/SSIM");
  infer_cmd->add_option("--metrics", infer_args.metrics, "Metrics CSV path (default: stdout)");

  CheckArgs check_args;
  auto* check_cmd = app.add_subcommand("check", "Run the invariant suite");
  check_cmd->add_flag("--fast", check_args.fast, "Skip gradient checks");
  check_cmd->add_option("--sabotage", check_args.sabotage, "Inject a fault: grad");
  check_cmd->add_option("--seed", check_args.seed, "Seed");

  ProfileArgs profile_args;
  auto* profile_cmd = app.add_subcommand("profile", "Evaluate cost formulas and model counts as CSV");
  profile_cmd->add_option("--H", profile_args.H, "Heights")->delimiter(',');
  profile_cmd->add_option("--W", profile_args.W, "Widths")->delimiter(',');
  profile_cmd->add_option("--C", profile_args.C, "Channels")->delimiter(',');
  profile_cmd->add_option("--L", profile_args.L, "Window sizes")->delimiter(',');
  profile_cmd->add_option("--S", profile_args.S, "Sparse intervals")->delimiter(',');
  profile_cmd->add_option("--model", profile_args.presets, "Presets to count (tiny, paper)")
      ->delimiter(',')
      ->check(CLI::IsMember({"tiny", "paper"}));
  profile_cmd->add_option("--out", profile_args.out, "CSV path (default: stdout)");

  VizArgs viz_args;
  auto* viz_cmd = app.add_subcommand("viz", "Dump a window layout as PNG and text");
  viz_cmd->add_option("--scheme", viz_args.scheme, "rect, tri, sparse-rect, sparse-tri");
  viz_cmd->add_option("--window", viz_args.window, "Square size M");
  viz_cmd->add_option("--shift", viz_args.shifts, "Shift(s)")->delimiter(',');
  viz_cmd->add_option("--interval", viz_args.interval, "Sparse interval");
  viz_cmd->add_option("--height", viz_args.height, "Map height (default 2*I*M)");
  viz_cmd->add_option("--width", viz_args.width, "Map width (default: height)");
  viz_cmd->add_option("--prefix", viz_args.prefix, "Output path prefix");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (infer_cmd->parsed()) return cmd_infer(infer_args, out);
    if (check_cmd->parsed()) return cmd_check(check_args, out);
    if (profile_cmd->parsed()) return cmd_profile(profile_args, out);
    if (viz_cmd->parsed()) return cmd_viz(viz_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const ImageIoError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace cfat::cli
