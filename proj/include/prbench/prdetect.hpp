// SPDX-License-Identifier: Apache-2.0
//
// Step-width detection from parameter sweeps: each parameter is classified
// as linear (width 1) or stepped, and the step width is the spacing of the
// dominant peaks in the consecutive execution-time deltas.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "prbench/domain.hpp"
#include "prbench/json_io.hpp"
#include "prbench/sweep.hpp"

namespace prbench {

struct DetectorConfig {
  /// Relative RMSE (RMSE / mean(y)) below which a sweep counts as linear.
  double threshold_linear{0.05};
  /// Peaks need prominence >= this fraction of max(deltas).
  double min_peak_prominence{0.5};
  /// Largest tolerated |distance - mode| as a multiple of the mode.
  double uniformity_tolerance{1.0};
};

void validate(const DetectorConfig& cfg);

struct LinearFit {
  double slope{0.0};
  double rmse{0.0};
  double relative_rmse{0.0};
};

/// Compares y against the line through (x_min, y_min) and (x_max, y_max).
LinearFit fit_endpoint_line(std::span<const std::int64_t> xs, std::span<const double> ys);

/// True iff relative RMSE against the endpoint line is below threshold_linear.
bool test_linear_behavior(std::span<const std::int64_t> xs, std::span<const double> ys,
                          const DetectorConfig& cfg = {});

/// deltas[i] = ys[i + 1] - ys[i].
std::vector<double> execution_time_deltas(std::span<const double> ys);

/// Local maxima (plateaus resolve to their middle sample; the first and last
/// samples never qualify), as in scipy.signal.find_peaks.
std::vector<std::size_t> local_maxima(std::span<const double> values);
/// Topographic prominence of each listed peak.
std::vector<double> peak_prominences(std::span<const double> values,
                                     std::span<const std::size_t> peaks);
/// Local maxima with prominence >= min_prominence.
std::vector<std::size_t> find_peaks(std::span<const double> values, double min_prominence);

/// Mode of the x-distances between consecutive prominent peaks of `deltas`;
/// ties fall back to the rounded median. `xs` holds either the sweep points
/// (deltas.size() + 1 entries, delta i sits at xs[i]) or one position per
/// delta. Throws NoPeaks with fewer than two peaks, NonUniformSteps when a
/// distance strays further than uniformity_tolerance * mode from the mode.
std::int64_t find_step_width(std::span<const double> deltas, std::span<const std::int64_t> xs,
                             const DetectorConfig& cfg = {});

/// Width 1 for linear parameters, otherwise the detected step width. Errors
/// keep their code and name the parameter.
StepWidthMap determine_step_widths(const std::map<std::string, SweepResult>& sweeps,
                                   const DetectorConfig& cfg = {});

/// {"format_version":"1.0","kind":"Conv2D","widths":{"C":8,...}}
json widths_to_json(OpKind kind, const StepWidthMap& widths);
std::pair<OpKind, StepWidthMap> widths_from_json(const json& j);

}  // namespace prbench
