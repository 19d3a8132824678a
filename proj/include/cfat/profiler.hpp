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
#include <ostream>
#include <string>
#include <vector>

namespace cfat {

using Count = unsigned __int128;

std::string to_string(Count c);

/// Global attention: 4 HW C^2 + 2 (HW)^2 C.
Count msa_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C);
/// Non-overlapping windows of L x L: 4 HW C^2 + 2 HW L^2 C.
Count dense_window_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C, std::uint64_t L);
/// Interval-S sparse attention: 4 HW C^2 + 2 (HW / S)^2 C. HW must be
/// divisible by S.
Count sparse_window_cost(std::uint64_t H, std::uint64_t W, std::uint64_t C, std::uint64_t S);

struct ModelCost {
  std::uint64_t params = 0;
  std::uint64_t macs = 0;  // one forward at batch 1
  std::uint64_t attention_macs = 0;
};

/// Structural count over the configuration, matching the instrumented
/// counters of the primitives (linear, convolutions, attention products) on
/// the padded input size.
ModelCost model_macs(const ModelConfig& cfg, int height, int width);

struct CostReport {
  std::string formula;
  std::uint64_t H, W, C, L, S;
  Count count;
};

/// Header `formula,H,W,C,L,S,count`, then one line per report.
void write_cost_csv(std::ostream& out, const std::vector<CostReport>& reports);

}  // namespace cfat
