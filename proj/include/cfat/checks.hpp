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

#include "cfat/numerics.hpp"
#include "cfat/model.hpp"

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace cfat {

/// Uniform [lo, hi) tensor from raw generator bits.
Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

/// Fixed L1 target y0 + sign * U(0.05, 0.3), so that small parameter
/// perturbations never cross the |.| kink.
Tensor<double> offset_target(const Tensor<double>& y0, std::mt19937_64& rng);

struct CheckOptions {
  bool fast = false;           // skip gradient checks (primitives still run under sabotage)
  bool sabotage_grad = false;  // scale analytic gradients by 2
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CheckResult> run_checks(const CheckOptions& options);
void print_check_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace cfat
