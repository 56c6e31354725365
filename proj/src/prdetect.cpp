// SPDX-License-Identifier: Apache-2.0

#include "prbench/prdetect.hpp"

#include <algorithm>
#include <cmath>

namespace prbench {

void validate(const DetectorConfig& cfg) {
  if (!(cfg.threshold_linear > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold_linear must be > 0");
  }
  if (!(cfg.min_peak_prominence > 0.0) || cfg.min_peak_prominence > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "min_peak_prominence must lie in (0, 1]");
  }
  if (cfg.uniformity_tolerance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "uniformity_tolerance must be >= 0");
  }
}

LinearFit fit_endpoint_line(std::span<const std::int64_t> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "linear test needs >= 2 paired points");
  }
  const auto [x_lo, x_hi] = std::minmax_element(xs.begin(), xs.end());
  const auto [y_lo, y_hi] = std::minmax_element(ys.begin(), ys.end());
  if (*x_lo == *x_hi) throw Error(ErrorCode::DegenerateInput, "all sweep xs are equal");

  LinearFit fit;
  fit.slope = (*y_hi - *y_lo) / static_cast<double>(*x_hi - *x_lo);
  double sq = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double estimate = fit.slope * static_cast<double>(xs[i] - *x_lo) + *y_lo;
    sq += (ys[i] - estimate) * (ys[i] - estimate);
    mean += ys[i];
  }
  const double n = static_cast<double>(xs.size());
  mean /= n;
  if (!(mean > 0.0)) throw Error(ErrorCode::DegenerateInput, "mean execution time must be positive");
  fit.rmse = std::sqrt(sq / n);
  fit.relative_rmse = fit.rmse / mean;
  return fit;
}

bool test_linear_behavior(std::span<const std::int64_t> xs, std::span<const double> ys,
                          const DetectorConfig& cfg) {
  return fit_endpoint_line(xs, ys).relative_rmse < cfg.threshold_linear;
}

std::vector<double> execution_time_deltas(std::span<const double> ys) {
  if (ys.size() < 2) throw Error(ErrorCode::DegenerateInput, "deltas need >= 2 points");
  std::vector<double> deltas(ys.size() - 1);
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) deltas[i] = ys[i + 1] - ys[i];
  return deltas;
}

std::vector<std::size_t> local_maxima(std::span<const double> values) {
  std::vector<std::size_t> peaks;
  const std::size_t n = values.size();
  std::size_t i = 1;
  while (n >= 3 && i + 1 < n) {
    if (values[i - 1] < values[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && values[ahead] == values[i]) ++ahead;
      if (values[ahead] < values[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

std::vector<double> peak_prominences(std::span<const double> values,
                                     std::span<const std::size_t> peaks) {
  std::vector<double> out;
  out.reserve(peaks.size());
  for (std::size_t peak : peaks) {
    const double height = values[peak];
    double left_min = height;
    for (std::size_t i = peak; i-- > 0;) {
      if (values[i] > height) break;
      left_min = std::min(left_min, values[i]);
    }
    double right_min = height;
    for (std::size_t i = peak + 1; i < values.size(); ++i) {
      if (values[i] > height) break;
      right_min = std::min(right_min, values[i]);
    }
    out.push_back(height - std::max(left_min, right_min));
  }
  return out;
}

std::vector<std::size_t> find_peaks(std::span<const double> values, double min_prominence) {
  const auto candidates = local_maxima(values);
  const auto prominence = peak_prominences(values, candidates);
  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (prominence[k] >= min_prominence) peaks.push_back(candidates[k]);
  }
  return peaks;
}

std::int64_t find_step_width(std::span<const double> deltas, std::span<const std::int64_t> xs,
                             const DetectorConfig& cfg) {
  if (deltas.size() < 2) throw Error(ErrorCode::DegenerateInput, "need >= 2 deltas");
  if (xs.size() != deltas.size() && xs.size() != deltas.size() + 1) {
    throw Error(ErrorCode::DegenerateInput, "xs must hold one entry per delta or per sweep point");
  }
  const double top = *std::max_element(deltas.begin(), deltas.end());
  if (!(top > 0.0)) throw Error(ErrorCode::NoPeaks, "deltas never increase");
  const auto peaks = find_peaks(deltas, cfg.min_peak_prominence * top);
  if (peaks.size() < 2) {
    throw Error(ErrorCode::NoPeaks, "found " + std::to_string(peaks.size()) + " prominent peak(s), need 2");
  }

  std::vector<std::int64_t> distances;
  for (std::size_t k = 1; k < peaks.size(); ++k) distances.push_back(xs[peaks[k]] - xs[peaks[k - 1]]);

  std::map<std::int64_t, int> counts;
  for (auto d : distances) ++counts[d];
  int best = 0;
  int holders = 0;
  std::int64_t mode = 0;
  for (const auto& [d, c] : counts) {
    if (c > best) {
      best = c;
      mode = d;
      holders = 1;
    } else if (c == best) {
      ++holders;
    }
  }
  if (holders > 1) {
    std::vector<std::int64_t> sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? static_cast<double>(sorted[n / 2])
                                : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    mode = std::max<std::int64_t>(1, std::llround(median));
  }
  for (auto d : distances) {
    if (std::abs(static_cast<double>(d - mode)) > cfg.uniformity_tolerance * static_cast<double>(mode)) {
      throw Error(ErrorCode::NonUniformSteps, "peak distance " + std::to_string(d) +
                                                  " strays from step width " + std::to_string(mode));
    }
  }
  return mode;
}

StepWidthMap determine_step_widths(const std::map<std::string, SweepResult>& sweeps,
                                   const DetectorConfig& cfg) {
  validate(cfg);
  StepWidthMap widths;
  for (const auto& [param, sweep] : sweeps) {
    try {
      validate(sweep);
      if (test_linear_behavior(sweep.xs, sweep.ys, cfg)) {
        widths[param] = 1;
      } else {
        const auto deltas = execution_time_deltas(sweep.ys);
        widths[param] = find_step_width(deltas, sweep.xs, cfg);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "parameter " + param + ": " + e.detail());
    }
  }
  return widths;
}

json widths_to_json(OpKind kind, const StepWidthMap& widths) {
  json w = json::object();
  for (const auto& name : canonical_params(kind)) {
    if (auto it = widths.find(name); it != widths.end()) w[name] = it->second;
  }
  for (const auto& [name, value] : widths) {
    if (!w.contains(name)) w[name] = value;
  }
  return json{{"format_version", kFormatVersion}, {"kind", std::string(to_string(kind))}, {"widths", w}};
}

std::pair<OpKind, StepWidthMap> widths_from_json(const json& j) {
  check_format_version(j, "widths");
  try {
    const OpKind kind = parse_op_kind(j.at("kind").get<std::string>());
    StepWidthMap widths;
    for (const auto& [name, v] : j.at("widths").items()) {
      const auto w = v.get<std::int64_t>();
      if (w < 1) throw Error(ErrorCode::InvalidArgument, "step width of " + name + " must be >= 1");
      if (!is_canonical_param(kind, name)) {
        throw Error(ErrorCode::InvalidArgument, name + " is not a parameter of " + std::string(to_string(kind)));
      }
      widths[name] = w;
    }
    return {kind, widths};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("widths: ") + e.what());
  }
}

}  // namespace prbench
