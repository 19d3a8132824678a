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

#include "cfat/ops.hpp"
#include "cfat/params.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace cfat {

struct GradCheckOptions {
  int samples = 200;
  double eps = 1e-4;
  std::uint64_t seed = 0;
  // Multiplies the analytic gradient before comparison; anything but 1 is a
  // deliberate fault used to self-test the harness.
  double analytic_scale = 1.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coordinates = 0;
  std::string worst_param;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Scalar objective evaluated on bound parameters.
using Objective = std::function<Var<double>(Binder<double>&)>;

/// Central differences (f(p + eps e) - f(p - eps e)) / 2 eps against the
/// tape gradient on `samples` random coordinates (a parameter tensor drawn
/// uniformly, then an element of it). Relative error uses the denominator
/// max(|a|, |n|, 1e-8). Throws NumericFailure if f is not finite.
GradCheckResult grad_check(ParamStore<double>& params, const Objective& f, const GradCheckOptions& options = {});

}  // namespace cfat
