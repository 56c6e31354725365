// SPDX-License-Identifier: Apache-2.0

#include "prbench/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prbench/csv.hpp"
#include "prbench/rng.hpp"

namespace prbench {

namespace {

void check_pairs(std::span<const double> measured, std::span<const double> estimated) {
  if (measured.size() != estimated.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(measured.size()) + " measured vs " +
                                               std::to_string(estimated.size()) + " estimated values");
  }
  if (measured.empty()) throw Error(ErrorCode::LengthMismatch, "no values to compare");
  for (double m : measured) {
    if (!(m > 0.0)) throw Error(ErrorCode::NonPositiveMeasured, "measured latencies must be positive");
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double mape(std::span<const double> measured, std::span<const double> estimated) {
  check_pairs(measured, estimated);
  double sum = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) sum += std::abs(measured[i] - estimated[i]) / measured[i];
  return 100.0 * sum / static_cast<double>(measured.size());
}

double rmspe(std::span<const double> measured, std::span<const double> estimated) {
  check_pairs(measured, estimated);
  double sum = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double r = (measured[i] - estimated[i]) / measured[i];
    sum += r * r;
  }
  return 100.0 * std::sqrt(sum / static_cast<double>(measured.size()));
}

std::string_view to_string(Strategy s) noexcept { return s == Strategy::Pr ? "pr" : "random_full"; }

EvalReport run_comparison(const Backend& backend, const ComparisonConfig& config) {
  if (config.sizes.empty()) throw Error(ErrorCode::InvalidArgument, "no dataset sizes given");
  for (std::size_t i = 1; i < config.sizes.size(); ++i) {
    if (config.sizes[i] <= config.sizes[i - 1]) throw Error(ErrorCode::InvalidArgument, "sizes must ascend");
  }
  if (config.test_set.empty()) throw Error(ErrorCode::InvalidArgument, "empty test set");
  if (config.n_seeds < 1) throw Error(ErrorCode::InvalidArgument, "n_seeds must be >= 1");
  validate(config.forest);

  const PrLattice pr = make_lattice(config.kind, config.widths, config.bounds, config.constraints);
  const PrLattice full = make_lattice(config.kind, {}, config.bounds, config.constraints);
  const std::set<LayerConfig> test(config.test_set.begin(), config.test_set.end());
  for (const auto& c : config.test_set) {
    if (c.kind != config.kind) throw Error(ErrorCode::KindMismatch, "test set holds " + to_string(c));
    validate(c);
  }

  EvalReport report;
  report.kind = config.kind;
  report.seed = config.seed;
  report.n_seeds = config.n_seeds;
  report.backend_id = backend.id();
  report.test_size = config.test_set.size();
  report.lattice_size = enumerate_count(pr);
  report.full_space_size = enumerate_count(full);

  std::vector<double> measured;
  for (const auto& c : config.test_set) measured.push_back(backend.measure(c, config.repeats).latency);

  const auto training_set = [&](const PrLattice& lattice, std::uint64_t n, std::uint64_t seed) {
    const std::uint64_t available = enumerate_count(lattice);
    const std::uint64_t draw = std::min<std::uint64_t>(available, n + test.size());
    std::vector<LayerConfig> picked;
    for (auto& c : sample(lattice, draw, seed)) {
      if (picked.size() == n) break;
      if (!test.contains(c)) picked.push_back(std::move(c));
    }
    if (picked.size() < n) {
      throw Error(ErrorCode::LatticeTooSmall, "only " + std::to_string(picked.size()) +
                                                  " configs outside the test set, need " + std::to_string(n));
    }
    for (const auto& c : picked) {
      if (test.contains(c)) throw Error(ErrorCode::TestTrainOverlap, "training config in test set: " + to_string(c));
    }
    return picked;
  };

  for (std::uint64_t n : config.sizes) {
    for (Strategy strategy : {Strategy::Pr, Strategy::RandomFull}) {
      CellResult cell{n, strategy, 0.0, 0.0, {}, {}};
      for (int k = 0; k < config.n_seeds; ++k) {
        const std::uint64_t run_seed = mix_seed(config.seed, static_cast<std::uint64_t>(k));
        const PrLattice& lattice = strategy == Strategy::Pr ? pr : full;
        const auto configs = training_set(lattice, n, mix_seed(run_seed, strategy == Strategy::Pr ? 0 : 1));

        std::vector<TrainingSample> samples;
        samples.reserve(configs.size());
        for (const auto& c : configs) samples.push_back({c, backend.measure(c, config.repeats).latency});
        ForestHyperparams hp = config.forest;
        hp.seed = mix_seed(run_seed, 2);
        std::optional<PrLattice> model_lattice;
        if (strategy == Strategy::Pr) model_lattice = pr;
        const LatencyModel model = fit(samples, hp, model_lattice);

        std::vector<double> estimated;
        for (const auto& c : config.test_set) estimated.push_back(estimate_layer(model, c));
        cell.seed_mape.push_back(mape(measured, estimated));
        cell.seed_rmspe.push_back(rmspe(measured, estimated));

        if (k == 0 && n == config.sizes.back()) {
          auto& errors = strategy == Strategy::Pr ? report.pr_errors : report.random_errors;
          for (std::size_t i = 0; i < measured.size(); ++i) {
            const double abs_error = std::abs(measured[i] - estimated[i]);
            errors.push_back({config.test_set[i], measured[i], estimated[i], abs_error,
                              100.0 * abs_error / measured[i]});
          }
        }
      }
      cell.mape = median(cell.seed_mape);
      cell.rmspe = median(cell.seed_rmspe);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

json to_json(const EvalReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"size", c.size},
                     {"strategy", std::string(to_string(c.strategy))},
                     {"mape", c.mape},
                     {"rmspe", c.rmspe},
                     {"train_size", c.size},
                     {"seed_mape", c.seed_mape},
                     {"seed_rmspe", c.seed_rmspe}});
  }
  const auto errors = [](const std::vector<LayerError>& list) {
    json out = json::array();
    for (const auto& e : list) {
      out.push_back({{"config", e.config},
                     {"measured_s", e.measured},
                     {"estimated_s", e.estimated},
                     {"abs_error_s", e.abs_error},
                     {"pct_error", e.pct_error}});
    }
    return out;
  };
  return json{{"format_version", kFormatVersion},
              {"kind", std::string(to_string(report.kind))},
              {"seed", report.seed},
              {"n_seeds", report.n_seeds},
              {"backend", report.backend_id},
              {"test_set", {{"size", report.test_size}}},
              {"lattice_size", report.lattice_size},
              {"full_space_size", report.full_space_size},
              {"results", cells},
              {"per_layer", {{"pr", errors(report.pr_errors)}, {"random_full", errors(report.random_errors)}}}};
}

std::string report_csv(const EvalReport& report) {
  std::string out = "size,strategy,mape,rmspe\n";
  for (const auto& c : report.cells) {
    out += csv::join({std::to_string(c.size), std::string(to_string(c.strategy)), csv::format_double(c.mape),
                      csv::format_double(c.rmspe)});
    out += "\n";
  }
  return out;
}

}  // namespace prbench
