// SPDX-License-Identifier: Apache-2.0
//
// One-parameter-at-a-time sweeps that expose step-wise timing.

#pragma once

#include <string>
#include <vector>

#include "prbench/backends.hpp"
#include "prbench/domain.hpp"
#include "prbench/json_io.hpp"

namespace prbench {

struct SweepPlan {
  OpKind kind{OpKind::Conv2D};
  std::string swept_param;
  std::vector<std::int64_t> values;  // strictly increasing
  LayerConfig fixed;                 // every other parameter at its default

  LayerConfig config_at(std::int64_t value) const;
};

struct SweepResult {
  SweepPlan plan;
  std::vector<std::int64_t> xs;
  std::vector<double> ys;
};

inline constexpr std::size_t kMinSweepPoints = 8;

/// One plan per swept parameter over [min, max] of its bounds. Throws
/// InvalidArgument for unknown names and EmptyRange when a range holds fewer
/// than kMinSweepPoints values. The stride should divide the expected step
/// width, otherwise steps alias.
std::vector<SweepPlan> plan_sweeps(const ParamBounds& bounds,
                                   const std::vector<std::string>& swept_params,
                                   std::int64_t stride = 1);

/// Measures every point of the plan. Points run concurrently only when both
/// `parallel` is set and the backend allows it; results are ordered by xs.
SweepResult run_sweep(const SweepPlan& plan, const Backend& backend, int repeats = 1,
                      bool parallel = false);

/// Throws DegenerateInput unless xs is strictly increasing, ys positive and
/// the lengths agree.
void validate(const SweepResult& result);

void to_json(json& j, const SweepResult& result);
void from_json(const json& j, SweepResult& result);

}  // namespace prbench
