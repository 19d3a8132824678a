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

#include "cfat/model.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace cfat {

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.scale = 4;
  c.channels = 180;
  c.heads = 6;
  c.rect_window = 16;
  c.tri_window = 32;
  c.shifts = {0, 8, 16, 24};
  c.n_wab = 6;
  c.n_pairs = 1;
  return c;
}

ModelConfig ModelConfig::tiny() { return ModelConfig(); }

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "tiny") return tiny();
  throw InvalidArgument("unknown preset '" + name + "' (expected paper or tiny)");
}

void ModelConfig::validate() const {
  require(scale == 2 || scale == 3 || scale == 4, "config: scale must be 2, 3 or 4");
  require(in_channels >= 1, "config: in_channels must be positive");
  require(n_wab >= 0, "config: n_wab must be non-negative");
  require(n_pairs >= 1, "config: n_pairs must be >= 1");
  require(n_wab == 0 || !shifts.empty(), "config: at least one shift is required");
  for (int s : shifts) require(s >= 0, "config: shifts must be non-negative");
  unit().validate();
}

UnitConfig ModelConfig::unit() const {
  UnitConfig u;
  u.channels = channels;
  u.heads = heads;
  u.rect_window = rect_window;
  u.tri_window = tri_window;
  u.interval = interval;
  u.alpha = alpha;
  u.beta = beta;
  u.mlp_ratio = mlp_ratio;
  u.se_squeeze = se_squeeze;
  u.overlap = overlap;
  u.use_cwab = use_cwab;
  u.circular = circular;
  return u;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && ptr == v.data() + v.size(), "config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty() && std::isfinite(out),
          "config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

}  // namespace

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "scale") scale = parse_int(key, v);
  else if (key == "channels") channels = parse_int(key, v);
  else if (key == "heads") heads = parse_int(key, v);
  else if (key == "rect_window") rect_window = parse_int(key, v);
  else if (key == "tri_window") tri_window = parse_int(key, v);
  else if (key == "n_wab") n_wab = parse_int(key, v);
  else if (key == "n_pairs") n_pairs = parse_int(key, v);
  else if (key == "alpha") alpha = parse_double(key, v);
  else if (key == "beta") beta = parse_double(key, v);
  else if (key == "overlap") overlap = parse_double(key, v);
  else if (key == "interval") interval = parse_int(key, v);
  else if (key == "mlp_ratio") mlp_ratio = parse_int(key, v);
  else if (key == "in_channels") in_channels = parse_int(key, v);
  else if (key == "se_squeeze") se_squeeze = parse_int(key, v);
  else if (key == "use_cwab") use_cwab = parse_bool(key, v);
  else if (key == "boundary") {
    require(v == "zero" || v == "circular", "config: 'boundary' expects zero or circular, got '" + v + "'");
    circular = v == "circular";
  } else if (key == "shifts") {
    shifts.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) shifts.push_back(parse_int(key, item));
    }
  } else if (key == "n_hwab") {
    // Redundant with `shifts`; accepted when consistent.
    require(parse_int(key, v) == n_hwab(), "config: n_hwab must equal the number of shifts");
  } else {
    throw InvalidArgument("config: unknown key '" + key + "'");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "scale = " << scale << "\n"
     << "channels = " << channels << "\n"
     << "heads = " << heads << "\n"
     << "rect_window = " << rect_window << "\n"
     << "tri_window = " << tri_window << "\n"
     << "shifts = ";
  for (std::size_t i = 0; i < shifts.size(); ++i) os << (i ? "," : "") << shifts[i];
  os << "\n"
     << "n_wab = " << n_wab << "\n"
     << "n_pairs = " << n_pairs << "\n"
     << "alpha = " << format_double(alpha) << "\n"
     << "beta = " << format_double(beta) << "\n"
     << "overlap = " << format_double(overlap) << "\n"
     << "interval = " << interval << "\n"
     << "mlp_ratio = " << mlp_ratio << "\n"
     << "in_channels = " << in_channels << "\n"
     << "se_squeeze = " << se_squeeze << "\n"
     << "use_cwab = " << (use_cwab ? "true" : "false") << "\n"
     << "boundary = " << (circular ? "circular" : "zero") << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text, const ModelConfig& base) {
  ModelConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    require(seen.insert(key).second, "config: duplicate key '" + key + "'");
    cfg.set(key, line.substr(eq + 1));
  }
  return cfg;
}

ModelConfig ModelConfig::from_text(const std::string& text) { return from_text(text, ModelConfig()); }

std::vector<int> upsample_stages(int scale) {
  switch (scale) {
    case 2: return {2};
    case 3: return {3};
    case 4: return {2, 2};
    default: throw InvalidArgument("unsupported scale " + std::to_string(scale));
  }
}

namespace {

ConvParams add_conv(BlockInit& b, const std::string& name, Index cin, Index cout, bool zero) {
  const Index fan_in = 9 * cin;
  Tensor<double> w = zero ? Initializer::zeros({fan_in, cout})
                          : b.init.uniform({fan_in, cout}, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  return {b.store.add(name + ".w", std::move(w)), b.store.add(name + ".b", Initializer::zeros({cout}))};
}

}  // namespace

Model build(const ModelConfig& cfg, ParamStore<double>& store, std::uint64_t seed, bool zero_residual) {
  cfg.validate();
  require(store.size() == 0, "build: parameter store must be empty");
  Initializer init(seed);
  BlockInit b{store, init, zero_residual};
  const UnitConfig unit = cfg.unit();
  const Index C = cfg.channels;

  Model m;
  m.config = cfg;
  m.head = add_conv(b, "head", cfg.in_channels, C, false);
  for (int i = 0; i < cfg.n_wab; ++i) {
    const WabKind kind = i % 2 == 0 ? WabKind::Dense : WabKind::Sparse;
    m.wabs.push_back(add_wab_params(b, "body.wab" + std::to_string(i), unit, kind, cfg.shifts, cfg.n_pairs));
  }
  m.body = add_conv(b, "body.conv", C, C, zero_residual);
  int stage = 0;
  for (int r : upsample_stages(cfg.scale)) {
    m.upsample.push_back(add_conv(b, "tail.up" + std::to_string(stage++), C, C * r * r, false));
  }
  m.out = add_conv(b, "tail.out", C, cfg.in_channels, false);
  return m;
}

namespace {

template <typename S>
Var<S> conv(Binder<S>& bind, const Var<S>& x, const ConvParams& p, bool circular) {
  return conv2d(x, bind(p.w), bind(p.b), 3, circular ? Padding::Circular : Padding::Zero);
}

struct Padded {
  int height, width, padded_height, padded_width;
};

template <typename S>
Padded padding_for(const Model& model, const Var<S>& lr) {
  const ModelConfig& cfg = model.config;
  require(lr.value().rank() == 4, "forward: expected a B x H x W x C image, got " + to_string(lr.shape()));
  require(lr.value().dim(3) == cfg.in_channels, "forward: input has " + std::to_string(lr.value().dim(3)) +
                                                    " channels, model expects " + std::to_string(cfg.in_channels));
  const int H = static_cast<int>(lr.value().dim(1)), W = static_cast<int>(lr.value().dim(2));
  require(H >= 1 && W >= 1, "forward: empty image");
  const int P = cfg.pad_multiple();
  return {H, W, (H + P - 1) / P * P, (W + P - 1) / P * P};
}

template <typename S>
Var<S> pad_input(const Var<S>& lr, const Padded& p) {
  if (p.padded_height == p.height && p.padded_width == p.width) return lr;
  const Index B = lr.value().dim(0), C = lr.value().dim(3);
  return gather_rows(lr, reflect_pad_index(B, p.height, p.width, p.padded_height, p.padded_width),
                     {B, p.padded_height, p.padded_width, C});
}

template <typename S>
Var<S> tail(const Model& model, Binder<S>& bind, Var<S> x, const Padded& p) {
  const ModelConfig& cfg = model.config;
  const auto stages = upsample_stages(cfg.scale);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    x = pixel_shuffle(conv(bind, x, model.upsample[i], cfg.circular), stages[i]);
  }
  x = conv(bind, x, model.out, cfg.circular);
  if (p.padded_height == p.height && p.padded_width == p.width) return x;
  const int r = cfg.scale;
  const Index B = x.value().dim(0), C = x.value().dim(3);
  return gather_rows(x, crop_index(B, p.padded_height * r, p.padded_width * r, p.height * r, p.width * r),
                     {B, Index(p.height) * r, Index(p.width) * r, C});
}

}  // namespace

template <typename S>
Var<S> forward(const Model& model, Binder<S>& bind, const Var<S>& lr) {
  const ModelConfig& cfg = model.config;
  const Padded p = padding_for(model, lr);
  const UnitConfig unit = cfg.unit();
  const Var<S> shallow = conv(bind, pad_input(lr, p), model.head, cfg.circular);
  Var<S> x = shallow;
  for (const WabParams& w : model.wabs) x = wab(bind, x, unit, w);
  x = add(conv(bind, x, model.body, cfg.circular), shallow);
  return tail(model, bind, x, p);
}

template <typename S>
Var<S> forward_head_tail(const Model& model, Binder<S>& bind, const Var<S>& lr) {
  const Padded p = padding_for(model, lr);
  return tail(model, bind, conv(bind, pad_input(lr, p), model.head, model.config.circular), p);
}

template <typename S>
Tensor<S> infer(const Model& model, ParamStore<S>& params, const Tensor<S>& lr) {
  Binder<S> bind(params);
  return forward(model, bind, constant(lr)).value();
}

#define CFAT_INSTANTIATE_MODEL(S)                                                  \
  template Var<S> forward(const Model&, Binder<S>&, const Var<S>&);              \
  template Var<S> forward_head_tail(const Model&, Binder<S>&, const Var<S>&);    \
  template Tensor<S> infer(const Model&, ParamStore<S>&, const Tensor<S>&);

CFAT_INSTANTIATE_MODEL(float)
CFAT_INSTANTIATE_MODEL(double)

}  // namespace cfat
