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

#include "cfat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cfat {

namespace {

double evaluate(ParamStore<double>& params, const Objective& f) {
  Binder<double> bind(params);
  const Var<double> out = f(bind);
  require(out.value().size() == 1, "grad_check: objective must be scalar");
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericFailure("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(ParamStore<double>& params, const Objective& f, const GradCheckOptions& options) {
  require(options.samples > 0 && options.eps > 0.0, "grad_check: samples and eps must be positive");
  require(params.size() > 0, "grad_check: no parameters");

  params.zero_grad();
  {
    Tape<double> tape;
    Binder<double> bind(params, &tape);
    const Var<double> out = f(bind);
    require(out.value().size() == 1, "grad_check: objective must be scalar");
    if (!std::isfinite(out.value()[0])) throw NumericFailure("grad_check: objective is not finite");
    tape.backward(out);
  }

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (int s = 0; s < options.samples; ++s) {
    const ParamId id = static_cast<ParamId>(rng() % params.size());
    Parameter<double>& p = params[id];
    const Index i = static_cast<Index>(rng() % static_cast<std::uint64_t>(p.value.size()));
    const double analytic = (p.grad.empty() ? 0.0 : p.grad[i]) * options.analytic_scale;
    const double saved = p.value[i];
    p.value[i] = saved + options.eps;
    const double up = evaluate(params, f);
    p.value[i] = saved - options.eps;
    const double down = evaluate(params, f);
    p.value[i] = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    ++result.coordinates;
    if (rel > result.max_rel_error || result.worst_index < 0) {
      result.max_rel_error = rel;
      result.worst_param = p.name;
      result.worst_index = i;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace cfat
