// SPDX-License-Identifier: Apache-2.0

#include "prbench/sweep.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace prbench {

LayerConfig SweepPlan::config_at(std::int64_t value) const {
  LayerConfig config = fixed;
  config.params[swept_param] = value;
  return config;
}

std::vector<SweepPlan> plan_sweeps(const ParamBounds& bounds,
                                   const std::vector<std::string>& swept_params,
                                   std::int64_t stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "sweep stride must be >= 1");
  for (const auto& name : swept_params) {
    if (!is_canonical_param(bounds.kind, name)) {
      throw Error(ErrorCode::InvalidArgument,
                  name + " is not a parameter of " + std::string(to_string(bounds.kind)));
    }
  }
  const LayerConfig defaults = bounds.defaults();
  std::vector<SweepPlan> plans;
  for (const auto& name : swept_params) {
    const ParamRange& range = bounds.at(name);
    if (range.min > range.max) {
      throw Error(ErrorCode::EmptyRange, name + " has an empty range");
    }
    SweepPlan plan{bounds.kind, name, {}, defaults};
    for (std::int64_t v = range.min; v <= range.max; v += stride) plan.values.push_back(v);
    if (plan.values.size() < kMinSweepPoints) {
      throw Error(ErrorCode::EmptyRange, name + " range yields " + std::to_string(plan.values.size()) +
                                             " points, need at least " +
                                             std::to_string(kMinSweepPoints));
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

SweepResult run_sweep(const SweepPlan& plan, const Backend& backend, int repeats, bool parallel) {
  if (!backend.supports(plan.kind)) {
    throw Error(ErrorCode::UnsupportedSubject,
                backend.id() + " cannot measure " + std::string(to_string(plan.kind)));
  }
  const std::size_t n = plan.values.size();
  SweepResult result{plan, plan.values, std::vector<double>(n, 0.0)};
  std::vector<std::exception_ptr> failures(n);

  auto measure_point = [&](std::size_t i) {
    try {
      result.ys[i] = backend.measure(plan.config_at(plan.values[i]), repeats).latency;
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const unsigned workers = (parallel && backend.parallel_safe())
                               ? std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                                 static_cast<unsigned>(n)))
                               : 1u;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n && !failures[i]; ++i) measure_point(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += workers) measure_point(i);
      });
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i]) continue;
    const std::string where = "sweep point " + std::to_string(i) + " (" + plan.swept_param + "=" +
                              std::to_string(plan.values[i]) + ")";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BackendFailure, where + ": " + e.what());
    }
  }
  return result;
}

void validate(const SweepResult& result) {
  if (result.xs.size() != result.ys.size()) {
    throw Error(ErrorCode::DegenerateInput, "sweep xs and ys differ in length");
  }
  for (std::size_t i = 1; i < result.xs.size(); ++i) {
    if (result.xs[i] <= result.xs[i - 1]) {
      throw Error(ErrorCode::DegenerateInput, "sweep xs must be strictly increasing");
    }
  }
  for (double y : result.ys) {
    if (!(y > 0.0)) throw Error(ErrorCode::DegenerateInput, "sweep ys must be positive");
  }
}

void to_json(json& j, const SweepResult& result) {
  json fixed = result.plan.fixed;
  j = json{{"format_version", kFormatVersion},
           {"plan",
            {{"kind", std::string(to_string(result.plan.kind))},
             {"swept_param", result.plan.swept_param},
             {"values", result.plan.values},
             {"fixed", fixed.at("params")}}},
           {"xs", result.xs},
           {"ys", result.ys}};
}

void from_json(const json& j, SweepResult& result) {
  check_format_version(j, "sweep");
  try {
    const auto& plan = j.at("plan");
    result.plan.kind = parse_op_kind(plan.at("kind").get<std::string>());
    result.plan.swept_param = plan.at("swept_param").get<std::string>();
    result.plan.values = plan.value("values", std::vector<std::int64_t>{});
    result.plan.fixed = LayerConfig{result.plan.kind, {}};
    if (plan.contains("fixed")) {
      for (const auto& [name, v] : plan.at("fixed").items()) {
        result.plan.fixed.params[name] = v.get<std::int64_t>();
      }
    }
    result.xs = j.at("xs").get<std::vector<std::int64_t>>();
    result.ys = j.at("ys").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("sweep: ") + e.what());
  }
  if (result.plan.values.empty()) result.plan.values = result.xs;
  validate(result);
}

}  // namespace prbench
