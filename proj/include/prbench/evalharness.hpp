// SPDX-License-Identifier: Apache-2.0
//
// Error metrics and the sampling-strategy comparison: forests trained on
// representative samples versus uniform samples of the whole space, at equal
// measurement budgets.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "prbench/backends.hpp"
#include "prbench/forest.hpp"
#include "prbench/prset.hpp"

namespace prbench {

/// 100 * mean(|m - e| / m). Throws LengthMismatch or NonPositiveMeasured.
double mape(std::span<const double> measured, std::span<const double> estimated);
/// 100 * sqrt(mean(((m - e) / m)^2)).
double rmspe(std::span<const double> measured, std::span<const double> estimated);

enum class Strategy { Pr, RandomFull };
std::string_view to_string(Strategy s) noexcept;

struct ComparisonConfig {
  OpKind kind{OpKind::Conv2D};
  ParamBounds bounds;
  StepWidthMap widths;
  std::vector<Constraint> constraints;
  std::vector<std::uint64_t> sizes;  // strictly ascending
  std::vector<LayerConfig> test_set;
  std::uint64_t seed{0};
  int n_seeds{5};
  int repeats{1};
  ForestHyperparams forest;
};

struct CellResult {
  std::uint64_t size{0};
  Strategy strategy{Strategy::Pr};
  double mape{0.0};   // median over seeds
  double rmspe{0.0};  // median over seeds
  std::vector<double> seed_mape;
  std::vector<double> seed_rmspe;
};

struct LayerError {
  LayerConfig config;
  double measured{0.0};
  double estimated{0.0};
  double abs_error{0.0};
  double pct_error{0.0};
};

struct EvalReport {
  OpKind kind{OpKind::Conv2D};
  std::uint64_t seed{0};
  int n_seeds{1};
  std::string backend_id;
  std::size_t test_size{0};
  std::uint64_t lattice_size{0};
  std::uint64_t full_space_size{0};
  std::vector<CellResult> cells;  // size-major, Pr before RandomFull
  /// Per test layer, for the largest size and the first seed.
  std::vector<LayerError> pr_errors;
  std::vector<LayerError> random_errors;
};

/// For every size, seed and strategy: sample n training configs disjoint
/// from the test set, measure them, fit a forest and score it on the test
/// set. The Pr model estimates through its lattice mapping; the RandomFull
/// model predicts directly. Throws TestTrainOverlap if disjointness breaks.
EvalReport run_comparison(const Backend& backend, const ComparisonConfig& config);

json to_json(const EvalReport& report);
/// Header: size,strategy,mape,rmspe
std::string report_csv(const EvalReport& report);

}  // namespace prbench
